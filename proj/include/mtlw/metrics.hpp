#pragma once

#include <vector>

#include "mtlw/loss.hpp"

namespace mtlw {

/// One operating point of a ROC curve. Points are emitted with
/// non-decreasing false-positive rate; the curve starts at (0,0)
/// (threshold +inf) and ends at (1,1).
struct RocPoint {
    double threshold;
    double false_positive_rate;
    double true_positive_rate;
};

struct McNemarResult {
    std::size_t b = 0;  // first predictor correct, second wrong
    std::size_t c = 0;  // first wrong, second correct
    double chi2 = 0.0;
    double p_value = 1.0;
};

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties half-credited.
/// Not-coded labels are excluded first. Throws UndefinedMetricError when
/// either class is absent after exclusion.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// ROC curve with one point per distinct score plus the (0,0) endpoint.
/// Trapezoidal area under the returned points equals auc() on the same
/// inputs.
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

double trapezoid_area(const std::vector<RocPoint>& points);

/// McNemar paired test on two predictors' correctness against truth,
/// with Edwards continuity correction: chi2 = (|b-c|-1)^2 / (b+c),
/// 0 when no discordant pairs; p from the chi-square(1) survival function.
McNemarResult mcnemar(const std::vector<int>& pred_a, const std::vector<int>& pred_b,
                      const std::vector<int>& truth);

/// Survival function of chi-square with 1 degree of freedom:
/// p = erfc(sqrt(x / 2)).
double chi2_survival_1df(double x);

}  // namespace mtlw
