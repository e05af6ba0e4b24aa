#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtlw/loss.hpp"

namespace mtlw {

// ---------------------------------------------------------------------------
// Loss-weight scheduling policies.
//
// Periodic focusing: one task is "in focus" per fixed iteration window; its
// weight stays at base while every other task's weight is damped by a
// constant factor. Windows cycle through all tasks and the loop restarts at
// the primary task at every epoch boundary. Over one complete loop the mean
// provisional weight of task t is base[t] * (1 + (T-1)*factor) / T, so the
// base ratio is preserved.
//
// Internal-transfer weighting: an irreversible late-training transition
// that pins every auxiliary weight to a small constant so the primary task
// gets exclusive focus. Triggered by a validation plateau (or at a fixed
// epoch), never reverted.
// ---------------------------------------------------------------------------

struct PflpConfig {
    bool enabled = false;
    std::size_t window_iterations = 20;
    double damping_factor = 0.1;
    std::vector<std::size_t> focus_order;  // empty = identity order, primary first

    void validate(std::size_t task_count) const;
};

enum class ItwMode { Off, Auto, FixedEpoch };

struct ItwConfig {
    ItwMode mode = ItwMode::Off;
    double aux_weight = 0.1;
    std::size_t patience_epochs = 10;
    double min_delta = 0.005;
    std::optional<std::uint64_t> fixed_epoch;

    void validate() const;
};

enum class Phase { PflpActive, Plain, ItwLocked };

const char* phase_name(Phase p);

struct ScheduleState {
    Phase phase = Phase::Plain;
    WeightVector base_weights;
    std::uint64_t iteration_in_epoch = 0;
    std::uint64_t epoch = 0;  // completed epochs
    double best_val_auc = 0.0;
    bool has_best = false;
    std::uint64_t epochs_since_best = 0;
};

/// Fresh state for a run: phase follows pflp.enabled, counters zeroed.
ScheduleState make_schedule_state(const WeightVector& base, const PflpConfig& pflp);

/// Index of the task in focus for a given iteration of an epoch.
std::size_t focus_task_at(std::uint64_t iteration_in_epoch, const PflpConfig& pflp,
                          std::size_t task_count);

/// The weight vector actually applied at the current iteration. Pure
/// function of (phase, base weights, iteration counter, configs).
WeightVector provisional_weights(const ScheduleState& state, const PflpConfig& pflp,
                                 const ItwConfig& itw);

/// Advance within an epoch by one iteration.
ScheduleState advance_iteration(ScheduleState state);

/// Close an epoch: reset the focus loop to the primary task, update the
/// plateau bookkeeping with the epoch's validation primary AUC, and perform
/// the (irreversible) ITW transition when the trigger fires. nullopt marks
/// the AUC unavailable for this epoch; it counts as a non-improving epoch.
ScheduleState advance_epoch(ScheduleState state, std::optional<double> val_primary_auc,
                            const ItwConfig& itw);

/// True once the best validation AUC has gone patience_epochs without being
/// exceeded by more than min_delta.
bool plateau_detect(double best_val_auc, std::uint64_t epochs_since_best, const ItwConfig& itw);

/// One row of the per-iteration schedule trace. focus_task is -1 outside
/// the periodic-focusing phase.
struct ScheduleTraceRow {
    std::uint64_t epoch;      // 1-based reporting epoch
    std::uint64_t iteration;  // 0-based within the epoch
    int focus_task;
    std::vector<double> weights;
    Phase phase;
};

/// CSV export: header `epoch,iteration,focus_task,w_0..w_{T-1},phase`.
void write_schedule_trace(const std::vector<ScheduleTraceRow>& rows, std::size_t task_count,
                          const std::string& path);

}  // namespace mtlw
