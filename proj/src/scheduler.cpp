#include "mtlw/scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "mtlw/errors.hpp"

namespace mtlw {

void PflpConfig::validate(std::size_t task_count) const {
    if (window_iterations == 0) throw ConfigError("window_iterations must be >= 1");
    if (!(damping_factor > 0.0 && damping_factor < 1.0)) {
        throw ConfigError("damping_factor must be in (0,1)");
    }
    if (focus_order.empty()) return;
    if (focus_order.size() != task_count) {
        throw ConfigError("focus_order must list every task exactly once");
    }
    std::vector<bool> seen(task_count, false);
    for (std::size_t t : focus_order) {
        if (t >= task_count || seen[t]) {
            throw ConfigError("focus_order must be a permutation of task indices");
        }
        seen[t] = true;
    }
    if (focus_order[0] != 0) throw ConfigError("focus_order must start with the primary task");
}

void ItwConfig::validate() const {
    if (!(aux_weight > 0.0)) throw ConfigError("itw aux_weight must be positive");
    if (patience_epochs == 0) throw ConfigError("itw patience_epochs must be >= 1");
    if (min_delta < 0.0) throw ConfigError("itw min_delta must be non-negative");
    if ((mode == ItwMode::FixedEpoch) != fixed_epoch.has_value()) {
        throw ConfigError("itw fixed_epoch must be set exactly when mode is fixed_epoch");
    }
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::PflpActive: return "PFLP_ACTIVE";
        case Phase::Plain: return "PLAIN";
        case Phase::ItwLocked: return "ITW_LOCKED";
    }
    return "?";
}

ScheduleState make_schedule_state(const WeightVector& base, const PflpConfig& pflp) {
    ScheduleState state;
    state.phase = pflp.enabled ? Phase::PflpActive : Phase::Plain;
    state.base_weights = base;
    return state;
}

std::size_t focus_task_at(std::uint64_t iteration_in_epoch, const PflpConfig& pflp,
                          std::size_t task_count) {
    const std::uint64_t window = iteration_in_epoch / pflp.window_iterations;
    const std::size_t slot = static_cast<std::size_t>(window % task_count);
    return pflp.focus_order.empty() ? slot : pflp.focus_order[slot];
}

WeightVector provisional_weights(const ScheduleState& state, const PflpConfig& pflp,
                                 const ItwConfig& itw) {
    const auto& base = state.base_weights.values();
    switch (state.phase) {
        case Phase::Plain:
            return state.base_weights;
        case Phase::PflpActive: {
            const std::size_t focus = focus_task_at(state.iteration_in_epoch, pflp, base.size());
            std::vector<double> w(base.size());
            for (std::size_t t = 0; t < base.size(); ++t) {
                w[t] = t == focus ? base[t] : pflp.damping_factor * base[t];
            }
            return WeightVector(w);
        }
        case Phase::ItwLocked: {
            std::vector<double> w(base.size(), itw.aux_weight);
            w[0] = base[0];
            return WeightVector(w);
        }
    }
    return state.base_weights;
}

ScheduleState advance_iteration(ScheduleState state) {
    state.iteration_in_epoch += 1;
    return state;
}

ScheduleState advance_epoch(ScheduleState state, std::optional<double> val_primary_auc,
                            const ItwConfig& itw) {
    itw.validate();
    if (val_primary_auc && !(*val_primary_auc >= 0.0 && *val_primary_auc <= 1.0)) {
        throw ValidationError("validation AUC must lie in [0,1]");
    }

    // The focus loop restarts at the primary task every epoch.
    state.iteration_in_epoch = 0;
    state.epoch += 1;

    if (val_primary_auc && (!state.has_best || *val_primary_auc > state.best_val_auc + itw.min_delta)) {
        state.best_val_auc = *val_primary_auc;
        state.has_best = true;
        state.epochs_since_best = 0;
    } else {
        state.epochs_since_best += 1;
    }

    if (state.phase != Phase::ItwLocked) {
        const bool trigger_auto =
            itw.mode == ItwMode::Auto &&
            plateau_detect(state.best_val_auc, state.epochs_since_best, itw);
        const bool trigger_fixed =
            itw.mode == ItwMode::FixedEpoch && state.epoch >= *itw.fixed_epoch;
        if (trigger_auto || trigger_fixed) state.phase = Phase::ItwLocked;
    }
    return state;
}

bool plateau_detect(double best_val_auc, std::uint64_t epochs_since_best, const ItwConfig& itw) {
    (void)best_val_auc;
    return epochs_since_best >= itw.patience_epochs;
}

void write_schedule_trace(const std::vector<ScheduleTraceRow>& rows, std::size_t task_count,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "epoch,iteration,focus_task";
    for (std::size_t t = 0; t < task_count; ++t) out << ",w_" << t;
    out << ",phase\n";
    char buf[40];
    for (const auto& row : rows) {
        out << row.epoch << ',' << row.iteration << ',' << row.focus_task;
        for (double w : row.weights) {
            std::snprintf(buf, sizeof(buf), ",%.17g", w);
            out << buf;
        }
        out << ',' << phase_name(row.phase) << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace mtlw
