#include "mtlw/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mtlw/errors.hpp"
#include "mtlw/rng.hpp"

namespace mtlw {

void ModelConfig::validate() const {
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (task_count == 0) throw ConfigError("task_count must be positive");
    for (std::size_t w : encoder_layers) {
        if (w == 0) throw ConfigError("encoder layer width must be positive");
    }
    if (head_layers.empty()) throw ConfigError("head_layers must not be empty");
    for (std::size_t w : head_layers) {
        if (w == 0) throw ConfigError("head layer width must be positive");
    }
    if (head_layers.back() != 1) throw ConfigError("last head layer must emit exactly 1 logit");
}

void AdamHyper::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in (0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

namespace {

DenseLayer init_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    DenseLayer layer;
    layer.w = Matrix(fan_out, fan_in);
    layer.b.assign(fan_out, 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : layer.w.data) x = rng.uniform(-bound, bound);
    return layer;
}

LayerGrad zero_like(const DenseLayer& layer) {
    LayerGrad g;
    g.w = Matrix(layer.w.rows, layer.w.cols);
    g.b.assign(layer.b.size(), 0.0);
    return g;
}

Gradients zero_grads(const Model& model) {
    Gradients g;
    g.encoder.reserve(model.encoder.size());
    for (const auto& layer : model.encoder) g.encoder.push_back(zero_like(layer));
    g.heads.resize(model.heads.size());
    for (std::size_t t = 0; t < model.heads.size(); ++t) {
        g.heads[t].reserve(model.heads[t].size());
        for (const auto& layer : model.heads[t]) g.heads[t].push_back(zero_like(layer));
    }
    return g;
}

// z = a W^T + b for a batch of rows.
Matrix dense_forward(const DenseLayer& layer, const Matrix& a) {
    Matrix z(a.rows, layer.w.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t o = 0; o < layer.w.rows; ++o) {
            double acc = layer.b[o];
            for (std::size_t k = 0; k < layer.w.cols; ++k) {
                acc += layer.w.at(o, k) * a.at(i, k);
            }
            z.at(i, o) = acc;
        }
    }
    return z;
}

Matrix relu(const Matrix& z) {
    Matrix a = z;
    for (double& x : a.data) x = x > 0.0 ? x : 0.0;
    return a;
}

void check_finite(const Matrix& m, const std::string& where) {
    for (double x : m.data) {
        if (!std::isfinite(x)) throw NumericalError("non-finite activation at " + where);
    }
}

// Backprop through one dense layer: fills grad, returns d(input).
Matrix dense_backward(const DenseLayer& layer, const Matrix& a_in, const Matrix& dz,
                      LayerGrad& grad) {
    for (std::size_t o = 0; o < layer.w.rows; ++o) {
        for (std::size_t k = 0; k < layer.w.cols; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < a_in.rows; ++i) {
                acc += dz.at(i, o) * a_in.at(i, k);
            }
            grad.w.at(o, k) += acc;
        }
        double acc_b = 0.0;
        for (std::size_t i = 0; i < a_in.rows; ++i) acc_b += dz.at(i, o);
        grad.b[o] += acc_b;
    }
    Matrix da(a_in.rows, layer.w.cols);
    for (std::size_t i = 0; i < a_in.rows; ++i) {
        for (std::size_t k = 0; k < layer.w.cols; ++k) {
            double acc = 0.0;
            for (std::size_t o = 0; o < layer.w.rows; ++o) {
                acc += dz.at(i, o) * layer.w.at(o, k);
            }
            da.at(i, k) = acc;
        }
    }
    return da;
}

void mask_relu_backward(Matrix& da, const Matrix& z_pre) {
    for (std::size_t i = 0; i < da.data.size(); ++i) {
        if (!(z_pre.data[i] > 0.0)) da.data[i] = 0.0;
    }
}

}  // namespace

Model init_model(const ModelConfig& config) {
    config.validate();
    Model model;
    model.config = config;
    Rng rng(config.seed);

    std::size_t width = config.input_dim;
    for (std::size_t out : config.encoder_layers) {
        model.encoder.push_back(init_layer(width, out, rng));
        width = out;
    }
    const std::size_t encoder_out = width;

    model.heads.resize(config.task_count);
    for (std::size_t t = 0; t < config.task_count; ++t) {
        width = encoder_out;
        for (std::size_t out : config.head_layers) {
            model.heads[t].push_back(init_layer(width, out, rng));
            width = out;
        }
    }

    model.adam.m = zero_grads(model);
    model.adam.v = zero_grads(model);
    model.adam.step = 0;
    return model;
}

Matrix forward(const Model& model, const Matrix& batch) {
    if (batch.cols != model.config.input_dim) {
        throw DimensionError("forward: batch feature width " + std::to_string(batch.cols) +
                             " does not match input_dim " + std::to_string(model.config.input_dim));
    }
    Matrix a = batch;
    for (const auto& layer : model.encoder) a = relu(dense_forward(layer, a));

    Matrix logits(batch.rows, model.config.task_count);
    for (std::size_t t = 0; t < model.config.task_count; ++t) {
        Matrix h = a;
        const auto& head = model.heads[t];
        for (std::size_t l = 0; l < head.size(); ++l) {
            h = dense_forward(head[l], h);
            if (l + 1 < head.size()) h = relu(h);
        }
        for (std::size_t i = 0; i < batch.rows; ++i) logits.at(i, t) = h.at(i, 0);
    }
    return logits;
}

Gradients backward(const Model& model, const Matrix& batch, const LabelGrid& labels,
                   const WeightVector& weights, const std::vector<double>& pos_weights) {
    if (batch.cols != model.config.input_dim) {
        throw DimensionError("backward: batch feature width does not match input_dim");
    }
    if (labels.rows != batch.rows || labels.cols != model.config.task_count) {
        throw DimensionError("backward: labels shape does not match batch x task_count");
    }
    if (weights.size() != model.config.task_count) {
        throw DimensionError("backward: weight count does not match task_count");
    }

    // Forward with caches. pre[l] is the pre-activation of encoder layer l,
    // act[l] its rectified output; act[0] aliases the input batch.
    std::vector<Matrix> enc_pre(model.encoder.size());
    std::vector<Matrix> enc_act(model.encoder.size() + 1);
    enc_act[0] = batch;
    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
        enc_pre[l] = dense_forward(model.encoder[l], enc_act[l]);
        check_finite(enc_pre[l], "encoder layer " + std::to_string(l));
        enc_act[l + 1] = relu(enc_pre[l]);
    }
    const Matrix& enc_out = enc_act.back();

    const std::size_t tasks = model.config.task_count;
    std::vector<std::vector<Matrix>> head_pre(tasks);
    std::vector<std::vector<Matrix>> head_act(tasks);
    Matrix logits(batch.rows, tasks);
    for (std::size_t t = 0; t < tasks; ++t) {
        const auto& head = model.heads[t];
        head_pre[t].resize(head.size());
        head_act[t].resize(head.size() + 1);
        head_act[t][0] = enc_out;
        for (std::size_t l = 0; l < head.size(); ++l) {
            head_pre[t][l] = dense_forward(head[l], head_act[t][l]);
            check_finite(head_pre[t][l],
                         "head " + std::to_string(t) + " layer " + std::to_string(l));
            head_act[t][l + 1] =
                l + 1 < head.size() ? relu(head_pre[t][l]) : head_pre[t][l];
        }
        for (std::size_t i = 0; i < batch.rows; ++i) {
            logits.at(i, t) = head_act[t][head.size()].at(i, 0);
        }
    }

    const TaskLossReport report = total_loss(logits, labels, weights, pos_weights);
    if (!std::isfinite(report.total)) {
        throw NumericalError("non-finite total loss");
    }

    Gradients grads = zero_grads(model);
    Matrix d_enc_out(enc_out.rows, enc_out.cols);

    // d(total)/d(logit[i][t]) for the masked mean BCE, then back through
    // each head; the encoder-output gradient is the sum of head
    // contributions.
    for (std::size_t t = 0; t < tasks; ++t) {
        const std::size_t coded = report.per_task_coded_count[t];
        Matrix dz(batch.rows, 1);
        if (coded > 0 && weights[t] != 0.0) {
            const double pw = pos_weights.empty() ? 1.0 : pos_weights[t];
            const double scale = weights[t] / static_cast<double>(coded);
            for (std::size_t i = 0; i < batch.rows; ++i) {
                const int y = labels.at(i, t);
                if (!is_coded(y)) continue;
                const double s = sigmoid(logits.at(i, t));
                const double d = y == 1 ? pw * (s - 1.0) : s;
                dz.at(i, 0) = scale * d;
            }
        }
        const auto& head = model.heads[t];
        Matrix cur = dz;
        for (std::size_t l = head.size(); l-- > 0;) {
            if (l + 1 < head.size()) mask_relu_backward(cur, head_pre[t][l]);
            cur = dense_backward(head[l], head_act[t][l], cur, grads.heads[t][l]);
        }
        for (std::size_t i = 0; i < d_enc_out.data.size(); ++i) {
            d_enc_out.data[i] += cur.data[i];
        }
    }

    Matrix cur = d_enc_out;
    for (std::size_t l = model.encoder.size(); l-- > 0;) {
        mask_relu_backward(cur, enc_pre[l]);
        cur = dense_backward(model.encoder[l], enc_act[l], cur, grads.encoder[l]);
    }
    return grads;
}

namespace {

void require_same_layout(const LayerGrad& g, const DenseLayer& p, const std::string& where) {
    if (g.w.rows != p.w.rows || g.w.cols != p.w.cols || g.b.size() != p.b.size()) {
        throw DimensionError("adam_step: gradient shape mismatch at " + where);
    }
}

void adam_update_tensor(std::vector<double>& param, const std::vector<double>& grad,
                        std::vector<double>& m, std::vector<double>& v, const AdamHyper& h,
                        double bias1, double bias2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grad[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        param[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
}

void adam_update_layer(DenseLayer& layer, const LayerGrad& grad, LayerGrad& m, LayerGrad& v,
                       const AdamHyper& h, double bias1, double bias2,
                       const std::string& where) {
    require_same_layout(grad, layer, where);
    adam_update_tensor(layer.w.data, grad.w.data, m.w.data, v.w.data, h, bias1, bias2);
    adam_update_tensor(layer.b, grad.b, m.b, v.b, h, bias1, bias2);
}

}  // namespace

void adam_step(Model& model, const Gradients& grads, const AdamHyper& hyper) {
    hyper.validate();
    if (grads.encoder.size() != model.encoder.size() || grads.heads.size() != model.heads.size()) {
        throw DimensionError("adam_step: gradient layout does not match model");
    }
    model.adam.step += 1;
    const double t = static_cast<double>(model.adam.step);
    const double bias1 = 1.0 - std::pow(hyper.beta1, t);
    const double bias2 = 1.0 - std::pow(hyper.beta2, t);

    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
        adam_update_layer(model.encoder[l], grads.encoder[l], model.adam.m.encoder[l],
                          model.adam.v.encoder[l], hyper, bias1, bias2,
                          "encoder layer " + std::to_string(l));
    }
    for (std::size_t t2 = 0; t2 < model.heads.size(); ++t2) {
        if (grads.heads[t2].size() != model.heads[t2].size()) {
            throw DimensionError("adam_step: gradient layout does not match head " +
                                 std::to_string(t2));
        }
        for (std::size_t l = 0; l < model.heads[t2].size(); ++l) {
            adam_update_layer(model.heads[t2][l], grads.heads[t2][l],
                              model.adam.m.heads[t2][l], model.adam.v.heads[t2][l], hyper, bias1,
                              bias2, "head " + std::to_string(t2) + " layer " + std::to_string(l));
        }
    }
}

std::vector<double> flatten_parameters(const Model& model) {
    std::vector<double> out;
    auto push_layer = [&out](const DenseLayer& layer) {
        out.insert(out.end(), layer.w.data.begin(), layer.w.data.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    };
    for (const auto& layer : model.encoder) push_layer(layer);
    for (const auto& head : model.heads) {
        for (const auto& layer : head) push_layer(layer);
    }
    return out;
}

void write_parameter_dump(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    char buf[40];
    for (double x : flatten_parameters(model)) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", x);
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace mtlw
