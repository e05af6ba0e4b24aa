#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mtlw/data.hpp"
#include "mtlw/metrics.hpp"
#include "mtlw/model.hpp"
#include "mtlw/scheduler.hpp"

namespace mtlw {

// ---------------------------------------------------------------------------
// Experiment runner: one config in, per-epoch metrics out; grids of
// experiments share a dataset so their test predictions stay paired.
// ---------------------------------------------------------------------------

struct TrainingConfig {
    double learning_rate = 0.0001;
    std::size_t batch_size = 4;
    std::size_t max_epochs = 120;
    std::uint64_t seed = 0;
};

enum class RunMode { Stl, Mtl };

struct SynthDataRef {
    SynthConfig synth;
    SplitSpec split;
    bool operator==(const SynthDataRef&) const = default;
};

struct CsvDataRef {
    std::string path;
    SplitSpec split;
    bool operator==(const CsvDataRef&) const = default;
};

using DataRef = std::variant<SynthDataRef, CsvDataRef>;

struct ExperimentConfig {
    std::string name = "run";
    RunMode mode = RunMode::Mtl;
    std::vector<double> base_weights = {3.0, 1.0, 1.0, 1.0, 1.0};
    std::vector<double> pos_weights = {1.0, 1.0, 1.0, 1.0, 1.0};
    PflpConfig pflp;
    ItwConfig itw;
    TrainingConfig training;
    ModelConfig model;
    DataRef data = SynthDataRef{};
};

/// Built-in experiment presets: name, mode, base weights, periodic
/// focusing on/off, internal-transfer weighting on/off.
struct PresetSpec {
    const char* name;
    RunMode mode;
    std::array<double, kTaskCount> weights;
    bool pflp;
    bool itw;
};

const std::vector<PresetSpec>& preset_table();
std::vector<std::string> preset_names();

/// Overwrite name, mode, weights and policy switches from a preset;
/// everything else (data, model, training) is left untouched.
void apply_preset(ExperimentConfig& cfg, const std::string& preset);

/// Normalization applied before running: STL mode zeroes auxiliary weights
/// and disables both policies; an unset model seed inherits the training
/// seed.
ExperimentConfig resolve_experiment(const ExperimentConfig& cfg);

enum class Split { Train, Val, Test };
const char* split_name(Split s);

struct EpochMetric {
    std::size_t epoch;  // 1-based
    Split split;
    std::size_t task;
    double auc;  // NaN when undefined on that split
    double loss;
};

struct RunResult {
    std::string name;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure_reason;
    std::vector<EpochMetric> per_epoch;
    long selected_epoch = -1;  // 1-based; -1 when no epoch completed
    double test_auc_primary = std::numeric_limits<double>::quiet_NaN();
    std::vector<ScheduleTraceRow> schedule_trace;
    std::string schedule_trace_path;

    // Primary-task probabilities per epoch, for ROC export and paired
    // tests at the selected epoch.
    std::vector<std::vector<double>> val_primary_probs;
    std::vector<std::vector<double>> test_primary_probs;
    std::vector<std::string> val_ids, test_ids;
    std::vector<int> val_primary_labels, test_primary_labels;

    double metric_at(std::size_t epoch, Split split, std::size_t task) const;
};

Dataset materialize_data(const DataRef& ref);

RunResult run_experiment(const ExperimentConfig& cfg);
RunResult run_experiment_on(const ExperimentConfig& cfg, const Dataset& dataset,
                            const SplitIndices& splits);

struct GridOptions {
    std::size_t jobs = 1;
    double mcnemar_threshold = 0.5;
};

struct GridConfig {
    std::vector<ExperimentConfig> experiments;
    GridOptions options;
};

struct GridSummaryRow {
    std::string name;
    bool failed = false;
    long selected_epoch = -1;
    double auc_train_primary = std::numeric_limits<double>::quiet_NaN();
    double auc_val_primary = std::numeric_limits<double>::quiet_NaN();
    double auc_test_primary = std::numeric_limits<double>::quiet_NaN();
    std::array<double, kTaskCount - 1> aux_test_auc{};
    std::optional<McNemarResult> vs_stl;  // only for runs beating the STL baseline
};

struct GridSummary {
    std::vector<GridSummaryRow> rows;  // in grid declaration order
};

struct GridOutcome {
    GridSummary summary;
    std::vector<RunResult> runs;  // in grid declaration order
    GridConfig resolved;          // what actually ran; serialized as the manifest
};

/// Run every experiment of the grid (all must share one data reference) and
/// aggregate. Runs are independent; jobs > 1 executes them concurrently
/// with results identical to the sequential order.
GridOutcome run_grid(const GridConfig& grid);

/// Per-run artifacts: results_<name>.csv, roc_<name>_{val,test}.csv at the
/// selected epoch, schedule_<name>.csv.
void emit_outputs(RunResult& result, const std::string& out_dir);

/// Grid artifacts: every run's outputs plus summary.csv and mcnemar.csv.
void emit_outputs(GridOutcome& outcome, const std::string& out_dir);

}  // namespace mtlw
