#include "mtlw/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mtlw/errors.hpp"
#include "mtlw/loss.hpp"
#include "mtlw/rng.hpp"

namespace mtlw {

void SynthConfig::validate() const {
    if (n_total == 0) throw ConfigError("n_total must be positive");
    if (!(cohort_b_fraction >= 0.0 && cohort_b_fraction <= 1.0)) {
        throw ConfigError("cohort_b_fraction must lie in [0,1]");
    }
    if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
    for (double p : prevalence_targets) {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("prevalence targets must lie in (0,1)");
    }
    if (!(label_flip_prob >= 0.0 && label_flip_prob < 1.0)) {
        throw ConfigError("label_flip_prob must lie in [0,1)");
    }
    if (feature_jitter_sd < 0.0) throw ConfigError("feature_jitter_sd must be non-negative");
}

namespace {

std::vector<double> unit_direction(std::size_t dim, Rng& rng) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

bool task_coded_in_cohort(std::size_t task, Cohort cohort) {
    return cohort == Cohort::A || task == 0 || task == kCohortBAuxTask;
}

double positive_rate(const std::vector<double>& signal, const std::vector<double>& draws,
                     const std::vector<char>& coded, double bias) {
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (!coded[i]) continue;
        ++total;
        if (draws[i] < sigmoid(signal[i] + bias)) ++hits;
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

// Bisect the bias until the realized positive rate over coded samples
// crosses the target, then return whichever side of the step is closer;
// the caller checks the +-1% tolerance.
double calibrate_bias(const std::vector<double>& signal, const std::vector<double>& draws,
                      const std::vector<char>& coded, double target) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (positive_rate(signal, draws, coded, mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double err_lo = std::fabs(positive_rate(signal, draws, coded, lo) - target);
    const double err_hi = std::fabs(positive_rate(signal, draws, coded, hi) - target);
    return err_lo < err_hi ? lo : hi;
}

}  // namespace

Dataset synth_generate(const SynthConfig& config) {
    config.validate();
    const std::size_t n = config.n_total;
    const std::size_t dim = config.feature_dim;

    Rng rng_directions(mix_seed(config.seed, 0));
    Rng rng_structure(mix_seed(config.seed, 1));
    Rng rng_features(mix_seed(config.seed, 2));
    Rng rng_labels(mix_seed(config.label_seed != 0 ? config.label_seed : config.seed, 3));

    // Task signal directions.
    const auto u_shared = unit_direction(dim, rng_directions);
    std::vector<std::vector<double>> task_dirs(kTaskCount);
    for (auto& u : task_dirs) u = unit_direction(dim, rng_directions);

    // Interference directions: auxiliary tasks oppose the shared direction
    // on the first half of the feature space; the primary task is the one
    // being interfered with and gets none.
    std::vector<std::vector<double>> interference_dirs(kTaskCount, std::vector<double>(dim, 0.0));
    if (config.interference != 0.0) {
        const std::size_t half = dim / 2;
        std::vector<double> opposed(dim, 0.0);
        double norm2 = 0.0;
        for (std::size_t k = 0; k < half; ++k) {
            opposed[k] = -u_shared[k];
            norm2 += opposed[k] * opposed[k];
        }
        if (norm2 == 0.0) throw GenerationError("interference subspace is degenerate");
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : opposed) x *= inv;
        for (std::size_t t = 1; t < kTaskCount; ++t) interference_dirs[t] = opposed;
    }

    std::vector<std::vector<double>> coef(kTaskCount, std::vector<double>(dim));
    for (std::size_t t = 0; t < kTaskCount; ++t) {
        for (std::size_t k = 0; k < dim; ++k) {
            coef[t][k] = config.shared_signal * u_shared[k] + config.task_signal * task_dirs[t][k] +
                         config.interference * interference_dirs[t][k];
        }
    }

    // Cohort assignment: an exact count of B members, chosen by shuffle.
    const std::size_t n_b =
        static_cast<std::size_t>(std::llround(config.cohort_b_fraction * static_cast<double>(n)));
    if (n_b > n) throw ConfigError("cohort_b_fraction yields more B samples than n_total");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng_structure.shuffle(order);
    std::vector<Cohort> cohort(n, Cohort::A);
    for (std::size_t k = 0; k < n_b; ++k) cohort[order[k]] = Cohort::B;

    Dataset dataset;
    dataset.feature_dim = dim;
    dataset.samples.resize(n);
    char idbuf[24];
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = dataset.samples[i];
        std::snprintf(idbuf, sizeof(idbuf), "s%06zu", i);
        s.id = idbuf;
        s.cohort = cohort[i];
        s.features.resize(dim);
        for (double& x : s.features) x = rng_features.normal();
        if (config.feature_jitter_sd > 0.0) {
            for (double& x : s.features) x += config.feature_jitter_sd * rng_features.normal();
        }
        s.labels.fill(kNotCoded);
    }

    // Labels, one task at a time. Draws are consumed for every sample so
    // the stream does not depend on the cohort pattern.
    std::vector<double> signal(n), draws(n);
    std::vector<char> coded(n);
    for (std::size_t t = 0; t < kTaskCount; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = dataset.samples[i].features;
            double acc = 0.0;
            for (std::size_t k = 0; k < dim; ++k) acc += coef[t][k] * x[k];
            signal[i] = acc;
            coded[i] = task_coded_in_cohort(t, cohort[i]) ? 1 : 0;
        }
        for (std::size_t i = 0; i < n; ++i) draws[i] = rng_labels.uniform();

        const double target = config.prevalence_targets[t];
        const double bias = calibrate_bias(signal, draws, coded, target);
        const double achieved = positive_rate(signal, draws, coded, bias);
        if (std::fabs(achieved - target) > 0.01) {
            throw GenerationError("cannot reach prevalence target for task " +
                                  std::string(kTaskNames[t]) + ": wanted " + std::to_string(target) +
                                  ", best " + std::to_string(achieved));
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (!coded[i]) continue;
            dataset.samples[i].labels[t] = draws[i] < sigmoid(signal[i] + bias) ? 1 : 0;
        }
        if (config.label_flip_prob > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double u = rng_labels.uniform();
                if (coded[i] && u < config.label_flip_prob) {
                    dataset.samples[i].labels[t] = 1 - dataset.samples[i].labels[t];
                }
            }
        }
    }
    return dataset;
}

SplitIndices split_dataset(const Dataset& dataset, const SplitSpec& spec) {
    const std::size_t total = spec.train + spec.val + spec.test;
    if (total != dataset.size()) {
        throw ConfigError("split counts sum to " + std::to_string(total) + " but dataset has " +
                          std::to_string(dataset.size()) + " samples");
    }
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(order);

    SplitIndices out;
    auto it = order.begin();
    out.train.assign(it, it + static_cast<std::ptrdiff_t>(spec.train));
    it += static_cast<std::ptrdiff_t>(spec.train);
    out.val.assign(it, it + static_cast<std::ptrdiff_t>(spec.val));
    it += static_cast<std::ptrdiff_t>(spec.val);
    out.test.assign(it, it + static_cast<std::ptrdiff_t>(spec.test));
    return out;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "id";
    for (std::size_t k = 0; k < dataset.feature_dim; ++k) out << ",f" << k;
    for (const char* name : kTaskNames) out << ",label_" << name;
    out << ",cohort\n";
    char buf[40];
    for (const auto& s : dataset.samples) {
        out << s.id;
        for (double x : s.features) {
            std::snprintf(buf, sizeof(buf), ",%.17g", x);
            out << buf;
        }
        for (int label : s.labels) out << ',' << label;
        out << ',' << (s.cohort == Cohort::A ? 'A' : 'B') << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + field + "'");
    }
    return v;
}

int parse_label(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ": bad label '" + field + "'");
    }
    if (v != 0 && v != 1 && v != kNotCoded) {
        throw ValidationError("line " + std::to_string(line_no) + ": label " + std::to_string(v) +
                              " is not 0, 1 or -999");
    }
    return static_cast<int>(v);
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty dataset: " + path + " has no rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    if (header.size() < 2 + kTaskCount + 1 || header[0] != "id") {
        throw ParseError("line 1: unrecognized header");
    }
    const std::size_t dim = header.size() - 2 - kTaskCount;
    for (std::size_t k = 0; k < dim; ++k) {
        if (header[1 + k] != "f" + std::to_string(k)) {
            throw ParseError("line 1: expected column f" + std::to_string(k));
        }
    }
    for (std::size_t t = 0; t < kTaskCount; ++t) {
        const std::string want = std::string("label_") + kTaskNames[t];
        if (header[1 + dim + t] != want) throw ParseError("line 1: expected column " + want);
    }
    if (header.back() != "cohort") throw ParseError("line 1: expected final column 'cohort'");

    Dataset dataset;
    dataset.feature_dim = dim;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        Sample s;
        s.id = fields[0];
        s.features.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) s.features[k] = parse_double(fields[1 + k], line_no);
        for (std::size_t t = 0; t < kTaskCount; ++t) {
            s.labels[t] = parse_label(fields[1 + dim + t], line_no);
        }
        const std::string& cohort_field = fields.back();
        if (cohort_field == "A") {
            s.cohort = Cohort::A;
        } else if (cohort_field == "B") {
            s.cohort = Cohort::B;
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": cohort must be A or B");
        }
        if (s.cohort == Cohort::B) {
            for (std::size_t t = 0; t < kTaskCount; ++t) {
                const bool should_code = t == 0 || t == kCohortBAuxTask;
                if (should_code && s.labels[t] == kNotCoded) {
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": cohort B sample misses its " +
                                          std::string(kTaskNames[t]) + " label");
                }
                if (!should_code && s.labels[t] != kNotCoded) {
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": cohort B sample must not code " +
                                          std::string(kTaskNames[t]));
                }
            }
        }
        dataset.samples.push_back(std::move(s));
    }
    if (dataset.samples.empty()) {
        throw ValidationError("empty dataset: " + path + " has no data rows");
    }
    return dataset;
}

}  // namespace mtlw
