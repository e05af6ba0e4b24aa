#include "mtlw/loss.hpp"

#include <cmath>
#include <string>

#include "mtlw/errors.hpp"

namespace mtlw {

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw ConfigError("weight vector must not be empty");
    for (std::size_t t = 0; t < w_.size(); ++t) {
        if (!(w_[t] >= 0.0)) {
            throw ConfigError("weight for task " + std::to_string(t) + " must be non-negative");
        }
    }
    if (!(w_[0] > 0.0)) throw ConfigError("primary task weight must be positive");
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double bce_from_logit(double logit, int label, double pos_weight) {
    if (!std::isfinite(logit)) {
        throw NumericalError("non-finite logit in BCE");
    }
    // softplus(z) = log(1 + e^z), evaluated as max(z,0) + log1p(e^-|z|)
    const double softplus_neg = std::fmax(-logit, 0.0) + std::log1p(std::exp(-std::fabs(logit)));
    const double softplus_pos = std::fmax(logit, 0.0) + std::log1p(std::exp(-std::fabs(logit)));
    // label 1: pos_weight * softplus(-z); label 0: softplus(z)
    return label == 1 ? pos_weight * softplus_neg : softplus_pos;
}

std::pair<double, std::size_t> masked_task_loss(const std::vector<double>& logits,
                                                const std::vector<int>& labels,
                                                double pos_weight) {
    if (logits.size() != labels.size()) {
        throw DimensionError("masked_task_loss: logits and labels differ in length");
    }
    double sum = 0.0;
    std::size_t coded = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!is_coded(labels[i])) continue;
        sum += bce_from_logit(logits[i], labels[i], pos_weight);
        ++coded;
    }
    if (coded == 0) return {0.0, 0};
    return {sum / static_cast<double>(coded), coded};
}

TaskLossReport total_loss(const Matrix& logits, const LabelGrid& labels,
                          const WeightVector& weights,
                          const std::vector<double>& pos_weights) {
    if (logits.rows != labels.rows || logits.cols != labels.cols) {
        throw DimensionError("total_loss: logits and labels shapes differ");
    }
    if (logits.cols != weights.size()) {
        throw DimensionError("total_loss: weight count does not match task count");
    }
    if (!pos_weights.empty() && pos_weights.size() != weights.size()) {
        throw DimensionError("total_loss: pos_weights count does not match task count");
    }

    const std::size_t tasks = logits.cols;
    TaskLossReport report;
    report.per_task_loss.assign(tasks, 0.0);
    report.per_task_coded_count.assign(tasks, 0);

    std::vector<double> col_logits(logits.rows);
    std::vector<int> col_labels(logits.rows);
    for (std::size_t t = 0; t < tasks; ++t) {
        for (std::size_t i = 0; i < logits.rows; ++i) {
            col_logits[i] = logits.at(i, t);
            col_labels[i] = labels.at(i, t);
        }
        const double pw = pos_weights.empty() ? 1.0 : pos_weights[t];
        const auto [loss, coded] = masked_task_loss(col_logits, col_labels, pw);
        report.per_task_loss[t] = loss;
        report.per_task_coded_count[t] = coded;
        report.total += weights[t] * loss;
    }
    return report;
}

}  // namespace mtlw
