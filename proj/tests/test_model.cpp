#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mtlw/errors.hpp"
#include "mtlw/model.hpp"
#include "mtlw/rng.hpp"

using namespace mtlw;

namespace {

ModelConfig small_config(Rng& rng) {
    ModelConfig cfg;
    cfg.input_dim = 2 + rng.below(4);
    cfg.encoder_layers = {2 + rng.below(3)};
    if (rng.below(2) == 0) cfg.encoder_layers.push_back(2 + rng.below(3));
    cfg.head_layers = {2 + rng.below(3), 1};
    cfg.task_count = 1 + rng.below(4);
    cfg.seed = rng.next_u64();
    return cfg;
}

Matrix random_batch(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& x : m.data) x = rng.uniform(-1.5, 1.5);
    return m;
}

LabelGrid random_labels(std::size_t rows, std::size_t cols, Rng& rng) {
    LabelGrid g(rows, cols);
    for (int& y : g.data) {
        const auto r = rng.below(4);
        y = r == 3 ? kNotCoded : static_cast<int>(rng.below(2));
    }
    return g;
}

// Flat read/write access to every parameter, in flatten_parameters order.
std::vector<double*> parameter_slots(Model& model) {
    std::vector<double*> slots;
    auto add = [&slots](DenseLayer& layer) {
        for (double& x : layer.w.data) slots.push_back(&x);
        for (double& x : layer.b) slots.push_back(&x);
    };
    for (auto& layer : model.encoder) add(layer);
    for (auto& head : model.heads) {
        for (auto& layer : head) add(layer);
    }
    return slots;
}

std::vector<double> flatten_gradients(const Gradients& grads) {
    std::vector<double> flat;
    auto add = [&flat](const LayerGrad& g) {
        flat.insert(flat.end(), g.w.data.begin(), g.w.data.end());
        flat.insert(flat.end(), g.b.begin(), g.b.end());
    };
    for (const auto& g : grads.encoder) add(g);
    for (const auto& head : grads.heads) {
        for (const auto& g : head) add(g);
    }
    return flat;
}

double loss_value(const Model& model, const Matrix& batch, const LabelGrid& labels,
                  const WeightVector& weights) {
    return total_loss(forward(model, batch), labels, weights).total;
}

// Zero-init biases park every rectifier kink exactly where a dead input row
// lands, and central differences straddle those kinks. Generic offsets keep
// the finite-difference probe on smooth ground.
void jitter_biases(Model& model, Rng& rng) {
    auto fill = [&rng](DenseLayer& layer) {
        for (double& b : layer.b) b = rng.uniform(-0.4, 0.4);
    };
    for (auto& layer : model.encoder) fill(layer);
    for (auto& head : model.heads) {
        for (auto& layer : head) fill(layer);
    }
}

}  // namespace

TEST_CASE("model config validation") {
    ModelConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.head_layers = {8, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // last head layer must be 1
    cfg.head_layers = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ModelConfig{};
    cfg.input_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ModelConfig{};
    cfg.encoder_layers = {16, 0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("initialization is within the glorot bound with zero biases") {
    ModelConfig cfg;
    cfg.input_dim = 32;
    cfg.encoder_layers = {16};
    cfg.head_layers = {8, 1};
    cfg.seed = 11;
    const Model model = init_model(cfg);

    const double bound0 = std::sqrt(6.0 / (32 + 16));
    double lo = 0.0, hi = 0.0;
    for (double x : model.encoder[0].w.data) {
        CHECK(std::fabs(x) <= bound0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    // the draws actually use the range, not a corner of it
    CHECK(lo < -0.5 * bound0);
    CHECK(hi > 0.5 * bound0);
    for (double b : model.encoder[0].b) CHECK(b == 0.0);
    for (const auto& head : model.heads) {
        for (const auto& layer : head) {
            for (double b : layer.b) CHECK(b == 0.0);
        }
    }
    CHECK(model.adam.step == 0);
}

TEST_CASE("identical seeds give identical parameters, different seeds differ") {
    ModelConfig cfg;
    cfg.seed = 5;
    const auto a = flatten_parameters(init_model(cfg));
    const auto b = flatten_parameters(init_model(cfg));
    CHECK(a == b);
    cfg.seed = 6;
    CHECK(flatten_parameters(init_model(cfg)) != a);
}

TEST_CASE("forward output shape and input checking") {
    ModelConfig cfg;
    cfg.input_dim = 7;
    cfg.task_count = 3;
    cfg.seed = 2;
    const Model model = init_model(cfg);
    Rng rng(3);
    const Matrix batch = random_batch(4, 7, rng);
    const Matrix logits = forward(model, batch);
    CHECK(logits.rows == 4);
    CHECK(logits.cols == 3);
    CHECK_THROWS_AS(forward(model, random_batch(4, 6, rng)), DimensionError);
}

TEST_CASE("an identity encoder still feeds the heads") {
    ModelConfig cfg;
    cfg.input_dim = 5;
    cfg.encoder_layers = {};
    cfg.head_layers = {3, 1};
    cfg.task_count = 2;
    cfg.seed = 9;
    const Model model = init_model(cfg);
    Rng rng(10);
    const Matrix logits = forward(model, random_batch(3, 5, rng));
    CHECK(logits.rows == 3);
    CHECK(logits.cols == 2);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(2025);
    const double step = 1e-5;
    double worst = 0.0;
    for (int net = 0; net < 100; ++net) {
        Model model = init_model(small_config(rng));
        jitter_biases(model, rng);
        const std::size_t rows = 1 + rng.below(5);
        const Matrix batch = random_batch(rows, model.config.input_dim, rng);
        LabelGrid labels = random_labels(rows, model.config.task_count, rng);
        std::vector<double> wv(model.config.task_count);
        for (double& w : wv) w = rng.uniform(0.0, 3.0);
        wv[0] = 0.5 + rng.uniform(0.0, 2.5);
        const WeightVector weights(wv);

        const auto analytic = flatten_gradients(backward(model, batch, labels, weights));
        const auto slots = parameter_slots(model);
        REQUIRE(analytic.size() == slots.size());

        for (std::size_t k = 0; k < slots.size(); ++k) {
            const double saved = *slots[k];
            *slots[k] = saved + step;
            const double up = loss_value(model, batch, labels, weights);
            *slots[k] = saved - step;
            const double down = loss_value(model, batch, labels, weights);
            *slots[k] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double rel = std::fabs(analytic[k] - numeric) /
                               std::max({1.0, std::fabs(analytic[k]), std::fabs(numeric)});
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradients with positive-class weights also pass the check") {
    Rng rng(2026);
    const double step = 1e-5;
    for (int net = 0; net < 10; ++net) {
        Model model = init_model(small_config(rng));
        jitter_biases(model, rng);
        const Matrix batch = random_batch(3, model.config.input_dim, rng);
        const LabelGrid labels = random_labels(3, model.config.task_count, rng);
        std::vector<double> wv(model.config.task_count, 1.0);
        std::vector<double> pw(model.config.task_count);
        for (double& p : pw) p = rng.uniform(0.5, 4.0);
        const WeightVector weights(wv);

        const auto analytic = flatten_gradients(backward(model, batch, labels, weights, pw));
        const auto slots = parameter_slots(model);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const double saved = *slots[k];
            *slots[k] = saved + step;
            const double up = total_loss(forward(model, batch), labels, weights, pw).total;
            *slots[k] = saved - step;
            const double down = total_loss(forward(model, batch), labels, weights, pw).total;
            *slots[k] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double rel = std::fabs(analytic[k] - numeric) /
                               std::max({1.0, std::fabs(analytic[k]), std::fabs(numeric)});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("a task with zero weight gets zero head gradient") {
    Rng rng(31);
    ModelConfig cfg;
    cfg.input_dim = 4;
    cfg.encoder_layers = {5};
    cfg.head_layers = {3, 1};
    cfg.task_count = 3;
    cfg.seed = 8;
    const Model model = init_model(cfg);
    const Matrix batch = random_batch(6, 4, rng);
    LabelGrid labels(6, 3);
    for (int& y : labels.data) y = static_cast<int>(rng.below(2));

    const Gradients grads = backward(model, batch, labels, WeightVector({1.0, 0.0, 2.0}));
    for (const auto& layer : grads.heads[1]) {
        for (double g : layer.w.data) CHECK(g == 0.0);
        for (double g : layer.b) CHECK(g == 0.0);
    }
    // the other heads do learn
    double mag = 0.0;
    for (const auto& layer : grads.heads[0]) {
        for (double g : layer.w.data) mag += std::fabs(g);
    }
    CHECK(mag > 0.0);
}

TEST_CASE("a task with no coded labels gets zero head gradient") {
    Rng rng(32);
    ModelConfig cfg;
    cfg.input_dim = 4;
    cfg.task_count = 2;
    cfg.encoder_layers = {4};
    cfg.head_layers = {3, 1};
    cfg.seed = 13;
    const Model model = init_model(cfg);
    const Matrix batch = random_batch(5, 4, rng);
    LabelGrid labels(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        labels.at(i, 0) = static_cast<int>(rng.below(2));
        labels.at(i, 1) = kNotCoded;
    }
    const Gradients grads = backward(model, batch, labels, WeightVector({1.0, 5.0}));
    for (const auto& layer : grads.heads[1]) {
        for (double g : layer.w.data) CHECK(g == 0.0);
        for (double g : layer.b) CHECK(g == 0.0);
    }
}

TEST_CASE("head gradients are isolated: other heads' labels do not leak") {
    Rng rng(33);
    ModelConfig cfg;
    cfg.input_dim = 4;
    cfg.task_count = 2;
    cfg.seed = 21;
    const Model model = init_model(cfg);
    const Matrix batch = random_batch(5, 4, rng);
    LabelGrid labels = random_labels(5, 2, rng);
    for (std::size_t i = 0; i < 5; ++i) labels.at(i, 0) = static_cast<int>(rng.below(2));

    const Gradients before = backward(model, batch, labels, WeightVector({1.0, 1.0}));
    for (std::size_t i = 0; i < 5; ++i) {
        labels.at(i, 1) = labels.at(i, 1) == kNotCoded ? 1 : kNotCoded;
    }
    const Gradients after = backward(model, batch, labels, WeightVector({1.0, 1.0}));
    for (std::size_t l = 0; l < before.heads[0].size(); ++l) {
        CHECK(before.heads[0][l].w.data == after.heads[0][l].w.data);
        CHECK(before.heads[0][l].b == after.heads[0][l].b);
    }
}

TEST_CASE("backward reports non-finite activations with a location") {
    ModelConfig cfg;
    cfg.input_dim = 2;
    cfg.encoder_layers = {2};
    cfg.head_layers = {1};
    cfg.task_count = 1;
    cfg.seed = 3;
    Model model = init_model(cfg);
    model.encoder[0].w.at(0, 0) = std::numeric_limits<double>::infinity();
    Matrix batch(1, 2, 1.0);
    LabelGrid labels(1, 1, 1);
    CHECK_THROWS_AS(backward(model, batch, labels, WeightVector({1.0})), NumericalError);
}

TEST_CASE("adam takes a finite step against the gradient direction") {
    // single parameter net: input_dim 1, no encoder, head = [1]
    ModelConfig cfg;
    cfg.input_dim = 1;
    cfg.encoder_layers = {};
    cfg.head_layers = {1};
    cfg.task_count = 1;
    cfg.seed = 1;
    Model model = init_model(cfg);
    AdamHyper hyper;
    hyper.learning_rate = 0.01;

    Matrix batch(1, 1, 1.0);
    LabelGrid labels(1, 1, 1);  // wants the logit to grow
    const double before = forward(model, batch).at(0, 0);
    for (int i = 0; i < 50; ++i) {
        const Gradients grads = backward(model, batch, labels, WeightVector({1.0}));
        adam_step(model, grads, hyper);
    }
    const double after = forward(model, batch).at(0, 0);
    CHECK(after > before);
    CHECK(model.adam.step == 50);
}

TEST_CASE("adam first step size is learning_rate-scaled regardless of gradient magnitude") {
    // With bias correction the first update is lr * g / (|g| + eps')
    for (double scale : {1e-6, 1.0, 1e6}) {
        ModelConfig cfg;
        cfg.input_dim = 1;
        cfg.encoder_layers = {};
        cfg.head_layers = {1};
        cfg.task_count = 1;
        cfg.seed = 1;
        Model model = init_model(cfg);
        const double w0 = model.heads[0][0].w.at(0, 0);

        Gradients g;
        g.heads.resize(1);
        g.heads[0].push_back({Matrix(1, 1, scale), {0.0}});
        AdamHyper hyper;
        adam_step(model, g, hyper);
        const double moved = w0 - model.heads[0][0].w.at(0, 0);
        // epsilon keeps the tiny-gradient case off exactly lr by ~1%
        CHECK(moved == doctest::Approx(hyper.learning_rate).epsilon(0.02));
    }
}

TEST_CASE("parameter dump is deterministic and 17-digit round-trippable") {
    ModelConfig cfg;
    cfg.seed = 77;
    const Model model = init_model(cfg);
    const auto dir = std::filesystem::temp_directory_path();
    const auto p1 = dir / "mtlw_params_a.txt";
    const auto p2 = dir / "mtlw_params_b.txt";
    write_parameter_dump(model, p1.string());
    write_parameter_dump(model, p2.string());

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(s1.find("\r") == std::string::npos);

    const auto flat = flatten_parameters(model);
    std::istringstream lines(s1);
    std::string line;
    std::size_t k = 0;
    while (std::getline(lines, line)) {
        REQUIRE(k < flat.size());
        CHECK(std::stod(line) == flat[k]);
        ++k;
    }
    CHECK(k == flat.size());
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("adam rejects mismatched gradient layouts") {
    ModelConfig cfg;
    cfg.seed = 5;
    Model model = init_model(cfg);
    Gradients empty;
    CHECK_THROWS_AS(adam_step(model, empty, AdamHyper{}), DimensionError);
}
