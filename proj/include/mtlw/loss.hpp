#pragma once

#include <vector>

#include "mtlw/matrix.hpp"

namespace mtlw {

/// Label sentinel meaning "no supervision for this task on this sample".
/// Entries carrying it are skipped by every loss and metric.
constexpr int kNotCoded = -999;

inline bool is_coded(int label) { return label != kNotCoded; }

/// Ordered per-task loss weights, index 0 = primary task. Entries are
/// non-negative and the primary entry is strictly positive.
class WeightVector {
public:
    WeightVector() = default;
    explicit WeightVector(std::vector<double> w);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t t) const { return w_[t]; }
    // Ref-qualified so a temporary hands back an owned vector instead of a
    // reference that dies with it (range-for over rvalue.values() is the trap).
    const std::vector<double>& values() const& { return w_; }
    std::vector<double> values() && { return std::move(w_); }

private:
    std::vector<double> w_;
};

/// Per-task losses, how many samples carried a coded label for each task,
/// and the weighted total actually backpropagated.
struct TaskLossReport {
    std::vector<double> per_task_loss;
    std::vector<std::size_t> per_task_coded_count;
    double total = 0.0;
};

double sigmoid(double x);

/// Binary cross-entropy of a raw logit against a 0/1 label, in the stable
/// softplus form; finite for every finite logit. pos_weight scales the
/// positive-class term (1 = plain BCE).
double bce_from_logit(double logit, int label, double pos_weight = 1.0);

/// Mean BCE over the samples whose label is coded; (0, 0) when none are.
/// The logit at a not-coded position is never read.
std::pair<double, std::size_t> masked_task_loss(const std::vector<double>& logits,
                                                const std::vector<int>& labels,
                                                double pos_weight = 1.0);

/// Per-task masked losses combined as total = sum_t weights[t] * loss[t].
TaskLossReport total_loss(const Matrix& logits, const LabelGrid& labels,
                          const WeightVector& weights,
                          const std::vector<double>& pos_weights = {});

}  // namespace mtlw
