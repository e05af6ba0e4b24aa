#include "mtlw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtlw/errors.hpp"

namespace mtlw {

namespace {

// Drop not-coded entries, keep (score, label) pairs.
std::vector<std::pair<double, int>> coded_pairs(const std::vector<double>& scores,
                                                const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("scores and labels differ in length");
    }
    std::vector<std::pair<double, int>> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (is_coded(labels[i])) out.emplace_back(scores[i], labels[i]);
    }
    return out;
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    auto pairs = coded_pairs(scores, labels);
    std::size_t pos = 0, neg = 0;
    for (const auto& [s, y] : pairs) {
        (void)s;
        y == 1 ? ++pos : ++neg;
    }
    if (pos == 0 || neg == 0) {
        throw UndefinedMetricError("AUC needs at least one coded positive and one coded negative");
    }

    // Midrank formulation of the Mann-Whitney U statistic.
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) ++j;
        // ranks i+1 .. j (1-based); midrank = (i + 1 + j) / 2
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (pairs[k].second == 1) pos_rank_sum += midrank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    auto pairs = coded_pairs(scores, labels);
    std::size_t pos = 0, neg = 0;
    for (const auto& [s, y] : pairs) {
        (void)s;
        y == 1 ? ++pos : ++neg;
    }
    if (pos == 0 || neg == 0) {
        throw UndefinedMetricError("ROC needs at least one coded positive and one coded negative");
    }

    // Sweep thresholds from high to low; tied scores enter as one group so
    // ties become diagonal segments and the trapezoid area matches the
    // half-credit pairwise statistic.
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<RocPoint> points;
    points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) ++j;
        for (std::size_t k = i; k < j; ++k) {
            pairs[k].second == 1 ? ++tp : ++fp;
        }
        points.push_back({pairs[i].first, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
        i = j;
    }
    return points;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        const double dx = points[k].false_positive_rate - points[k - 1].false_positive_rate;
        area += dx * 0.5 * (points[k].true_positive_rate + points[k - 1].true_positive_rate);
    }
    return area;
}

McNemarResult mcnemar(const std::vector<int>& pred_a, const std::vector<int>& pred_b,
                      const std::vector<int>& truth) {
    if (pred_a.size() != truth.size() || pred_b.size() != truth.size()) {
        throw DimensionError("mcnemar: prediction and truth lengths differ");
    }
    McNemarResult r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool a_ok = pred_a[i] == truth[i];
        const bool b_ok = pred_b[i] == truth[i];
        if (a_ok && !b_ok) ++r.b;
        if (!a_ok && b_ok) ++r.c;
    }
    const double discordant = static_cast<double>(r.b + r.c);
    if (discordant > 0.0) {
        const double d = std::fabs(static_cast<double>(r.b) - static_cast<double>(r.c)) - 1.0;
        r.chi2 = d * d / discordant;
    }
    r.p_value = chi2_survival_1df(r.chi2);
    return r;
}

double chi2_survival_1df(double x) {
    if (x < 0.0) throw NumericalError("chi2_survival_1df: negative statistic");
    return std::erfc(std::sqrt(x / 2.0));
}

}  // namespace mtlw
