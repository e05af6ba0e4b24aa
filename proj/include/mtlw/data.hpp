#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mtlw/matrix.hpp"

namespace mtlw {

// The dataset side of the project is fixed at five binary tasks:
// index 0 is the primary task, 1..4 the auxiliary ones.
constexpr std::size_t kTaskCount = 5;
inline const std::array<const char*, kTaskCount> kTaskNames = {"LC", "AA", "CB", "COPD", "E"};

/// Index of the auxiliary task that cohort B codes in addition to the
/// primary task.
constexpr std::size_t kCohortBAuxTask = 3;

enum class Cohort { A, B };  // A = fully labeled, B = partially labeled

struct Sample {
    std::string id;
    std::vector<double> features;
    std::array<int, kTaskCount> labels;  // 0, 1 or kNotCoded
    Cohort cohort = Cohort::A;
};

struct Dataset {
    std::size_t feature_dim = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
};

/// Synthetic cohort generator. Features are standard normal; task t's
/// label is Bernoulli of sigmoid(a_t . x + b_t) with
///   a_t = shared_signal * u_shared + task_signal * u_t + interference * v_t,
/// where the u vectors are unit-norm pseudo-random directions and v_t (aux
/// tasks only) opposes u_shared on half of the feature space. The bias b_t
/// is calibrated by bisection until the empirical positive rate over the
/// coded samples matches the prevalence target within +-1%. Cohort B
/// samples keep only the primary and COPD-analog labels; the rest are set
/// to the not-coded sentinel.
struct SynthConfig {
    std::size_t n_total = 3386;
    double cohort_b_fraction = 870.0 / 3386.0;
    std::size_t feature_dim = 32;
    double shared_signal = 1.0;    // alpha
    double task_signal = 0.5;      // beta
    double interference = 0.0;     // gamma
    std::array<double, kTaskCount> prevalence_targets = {
        1075.0 / 3386.0,  // primary, coded by both cohorts
        184.0 / 2512.0,   // aux rates over the coding cohort
        276.0 / 2512.0,
        428.0 / 3386.0,   // coded by both cohorts
        269.0 / 2512.0,
    };
    std::uint64_t seed = 0;
    std::uint64_t label_seed = 0;    // 0 = derive from seed
    double label_flip_prob = 0.0;    // optional label noise
    double feature_jitter_sd = 0.0;  // optional feature jitter

    void validate() const;
    bool operator==(const SynthConfig&) const = default;
};

struct SplitSpec {
    std::size_t train = 2517;
    std::size_t val = 277;
    std::size_t test = 592;
    std::uint64_t seed = 0;

    bool operator==(const SplitSpec&) const = default;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

Dataset synth_generate(const SynthConfig& config);

/// Seeded shuffle then partition; counts must sum to the dataset size.
SplitIndices split_dataset(const Dataset& dataset, const SplitSpec& spec);

/// CSV schema (exact): header
///   id,f0,...,f{D-1},label_LC,label_AA,label_CB,label_COPD,label_E,cohort
/// labels are the integer literals 0, 1 or -999; features are decimal text
/// at 17 significant digits; LF line endings.
void save_csv(const Dataset& dataset, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace mtlw
