#include "mtlw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

#include "mtlw/config.hpp"
#include "mtlw/errors.hpp"
#include "mtlw/rng.hpp"

namespace mtlw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const std::vector<PresetSpec>& preset_table() {
    static const std::vector<PresetSpec> table = {
        {"stl", RunMode::Stl, {3.0, 0.0, 0.0, 0.0, 0.0}, false, false},
        {"mtl", RunMode::Mtl, {3.0, 3.0, 3.0, 3.0, 3.0}, false, false},
        {"mtl0", RunMode::Mtl, {3.0, 0.01, 0.01, 0.01, 0.01}, true, false},
        {"mtl1", RunMode::Mtl, {3.0, 0.1, 0.1, 0.1, 0.1}, true, false},
        {"mtl2", RunMode::Mtl, {3.0, 1.0, 1.0, 1.0, 1.0}, true, false},
        {"mtl3", RunMode::Mtl, {3.0, 3.0, 3.0, 3.0, 3.0}, true, false},
        {"mtl4", RunMode::Mtl, {3.0, 6.0, 6.0, 6.0, 6.0}, true, false},
        {"itw1", RunMode::Mtl, {3.0, 3.0, 3.0, 3.0, 3.0}, false, true},
        {"itw2", RunMode::Mtl, {3.0, 1.0, 1.0, 1.0, 1.0}, true, true},
        {"itw3", RunMode::Mtl, {3.0, 3.0, 3.0, 3.0, 3.0}, true, true},
    };
    return table;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : preset_table()) names.emplace_back(p.name);
    return names;
}

void apply_preset(ExperimentConfig& cfg, const std::string& preset) {
    for (const auto& p : preset_table()) {
        if (preset == p.name) {
            cfg.name = p.name;
            cfg.mode = p.mode;
            cfg.base_weights.assign(p.weights.begin(), p.weights.end());
            cfg.pflp.enabled = p.pflp;
            cfg.itw.mode = p.itw ? ItwMode::Auto : ItwMode::Off;
            cfg.itw.fixed_epoch.reset();
            return;
        }
    }
    throw ConfigError("unknown preset '" + preset + "'");
}

ExperimentConfig resolve_experiment(const ExperimentConfig& cfg) {
    ExperimentConfig out = cfg;
    if (out.mode == RunMode::Stl) {
        for (std::size_t t = 1; t < out.base_weights.size(); ++t) out.base_weights[t] = 0.0;
        out.pflp.enabled = false;
        out.itw.mode = ItwMode::Off;
        out.itw.fixed_epoch.reset();
    }
    if (out.model.seed == 0) out.model.seed = out.training.seed;
    return out;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

double RunResult::metric_at(std::size_t epoch, Split split, std::size_t task) const {
    for (const auto& m : per_epoch) {
        if (m.epoch == epoch && m.split == split && m.task == task) return m.auc;
    }
    return kNaN;
}

Dataset materialize_data(const DataRef& ref) {
    if (const auto* synth = std::get_if<SynthDataRef>(&ref)) {
        return synth_generate(synth->synth);
    }
    return load_csv(std::get<CsvDataRef>(ref).path);
}

namespace {

const SplitSpec& split_spec_of(const DataRef& ref) {
    if (const auto* synth = std::get_if<SynthDataRef>(&ref)) return synth->split;
    return std::get<CsvDataRef>(ref).split;
}

struct SplitView {
    Matrix features;
    LabelGrid labels;
    std::vector<std::string> ids;
};

SplitView gather(const Dataset& data, const std::vector<std::size_t>& indices) {
    SplitView view;
    view.features = Matrix(indices.size(), data.feature_dim);
    view.labels = LabelGrid(indices.size(), kTaskCount);
    view.ids.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Sample& s = data.samples[indices[r]];
        for (std::size_t k = 0; k < data.feature_dim; ++k) view.features.at(r, k) = s.features[k];
        for (std::size_t t = 0; t < kTaskCount; ++t) view.labels.at(r, t) = s.labels[t];
        view.ids.push_back(s.id);
    }
    return view;
}

void validate_experiment(const ExperimentConfig& cfg, const Dataset& data) {
    if (cfg.name.empty()) throw ConfigError("experiment name must not be empty");
    if (cfg.base_weights.size() != kTaskCount || cfg.pos_weights.size() != kTaskCount) {
        throw ConfigError("experiment '" + cfg.name + "': weight lists must have " +
                          std::to_string(kTaskCount) + " entries");
    }
    if (cfg.model.task_count != kTaskCount) {
        throw ConfigError("experiment '" + cfg.name + "': model task_count must be " +
                          std::to_string(kTaskCount));
    }
    if (cfg.model.input_dim != data.feature_dim) {
        throw ConfigError("experiment '" + cfg.name + "': model input_dim " +
                          std::to_string(cfg.model.input_dim) + " does not match feature_dim " +
                          std::to_string(data.feature_dim));
    }
    if (cfg.training.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (cfg.training.max_epochs == 0) throw ConfigError("max_epochs must be positive");
    if (!(cfg.training.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    for (double pw : cfg.pos_weights) {
        if (!(pw > 0.0) || !std::isfinite(pw)) {
            throw ConfigError("experiment '" + cfg.name + "': pos weights must be positive");
        }
    }
    cfg.model.validate();
    cfg.pflp.validate(kTaskCount);
    cfg.itw.validate();
    (void)WeightVector(cfg.base_weights);  // range checks
}

// Per-task AUC and mean masked loss on one split; NaN AUC when undefined.
void evaluate_split(const Model& model, const SplitView& view, std::size_t epoch, Split which,
                    RunResult& result, std::vector<double>* primary_probs_out) {
    const Matrix logits = forward(model, view.features);
    for (double x : logits.data) {
        if (!std::isfinite(x)) {
            throw NumericalError("non-finite logits while evaluating the " +
                                 std::string(split_name(which)) + " split");
        }
    }
    std::vector<double> probs(logits.rows);
    std::vector<double> col(logits.rows);
    std::vector<int> lab(logits.rows);
    for (std::size_t t = 0; t < kTaskCount; ++t) {
        for (std::size_t i = 0; i < logits.rows; ++i) {
            col[i] = sigmoid(logits.at(i, t));
            lab[i] = view.labels.at(i, t);
        }
        if (t == 0) probs = col;
        double auc_value = kNaN;
        try {
            auc_value = auc(col, lab);
        } catch (const UndefinedMetricError&) {
        }
        const auto [loss, coded] = masked_task_loss(
            [&] {
                std::vector<double> raw(logits.rows);
                for (std::size_t i = 0; i < logits.rows; ++i) raw[i] = logits.at(i, t);
                return raw;
            }(),
            lab);
        (void)coded;
        result.per_epoch.push_back({epoch, which, t, auc_value, loss});
    }
    if (primary_probs_out) *primary_probs_out = std::move(probs);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    const Dataset dataset = materialize_data(cfg.data);
    const SplitIndices splits = split_dataset(dataset, split_spec_of(cfg.data));
    return run_experiment_on(cfg, dataset, splits);
}

RunResult run_experiment_on(const ExperimentConfig& raw_cfg, const Dataset& dataset,
                            const SplitIndices& splits) {
    ExperimentConfig cfg = resolve_experiment(raw_cfg);
    if (cfg.model.input_dim == 0) cfg.model.input_dim = dataset.feature_dim;
    validate_experiment(cfg, dataset);

    const SplitView train = gather(dataset, splits.train);
    const SplitView val = gather(dataset, splits.val);
    const SplitView test = gather(dataset, splits.test);

    RunResult result;
    result.name = cfg.name;
    result.seed = cfg.training.seed;
    result.val_ids = val.ids;
    result.test_ids = test.ids;
    for (std::size_t i = 0; i < val.labels.rows; ++i) {
        result.val_primary_labels.push_back(val.labels.at(i, 0));
    }
    for (std::size_t i = 0; i < test.labels.rows; ++i) {
        result.test_primary_labels.push_back(test.labels.at(i, 0));
    }

    Model model = init_model(cfg.model);
    AdamHyper hyper;
    hyper.learning_rate = cfg.training.learning_rate;
    const WeightVector base(cfg.base_weights);
    ScheduleState state = make_schedule_state(base, cfg.pflp);
    Rng shuffle_rng(mix_seed(cfg.training.seed, 11));

    const std::size_t batch = cfg.training.batch_size;
    std::vector<std::size_t> epoch_order(train.ids.size());

    try {
        for (std::size_t epoch = 1; epoch <= cfg.training.max_epochs; ++epoch) {
            std::iota(epoch_order.begin(), epoch_order.end(), std::size_t{0});
            shuffle_rng.shuffle(epoch_order);

            for (std::size_t start = 0; start < epoch_order.size(); start += batch) {
                const std::size_t stop = std::min(start + batch, epoch_order.size());
                Matrix bx(stop - start, dataset.feature_dim);
                LabelGrid by(stop - start, kTaskCount);
                for (std::size_t r = start; r < stop; ++r) {
                    const std::size_t row = epoch_order[r];
                    for (std::size_t k = 0; k < dataset.feature_dim; ++k) {
                        bx.at(r - start, k) = train.features.at(row, k);
                    }
                    for (std::size_t t = 0; t < kTaskCount; ++t) {
                        by.at(r - start, t) = train.labels.at(row, t);
                    }
                }

                const WeightVector w = provisional_weights(state, cfg.pflp, cfg.itw);
                const int focus = state.phase == Phase::PflpActive
                                      ? static_cast<int>(focus_task_at(state.iteration_in_epoch,
                                                                       cfg.pflp, kTaskCount))
                                      : -1;
                result.schedule_trace.push_back(
                    {epoch, state.iteration_in_epoch, focus, w.values(), state.phase});

                const Gradients grads = backward(model, bx, by, w, cfg.pos_weights);
                adam_step(model, grads, hyper);
                state = advance_iteration(state);
            }

            std::vector<double> val_probs, test_probs;
            evaluate_split(model, train, epoch, Split::Train, result, nullptr);
            evaluate_split(model, val, epoch, Split::Val, result, &val_probs);
            evaluate_split(model, test, epoch, Split::Test, result, &test_probs);
            result.val_primary_probs.push_back(std::move(val_probs));
            result.test_primary_probs.push_back(std::move(test_probs));

            const double val_auc = result.metric_at(epoch, Split::Val, 0);
            state = advance_epoch(
                state, std::isnan(val_auc) ? std::nullopt : std::optional<double>(val_auc),
                cfg.itw);
        }
    } catch (const NumericalError& err) {
        result.failed = true;
        result.failure_reason = err.what();
        // Roll back to the last fully evaluated epoch.
        const std::size_t completed = result.val_primary_probs.size();
        std::erase_if(result.per_epoch, [&](const EpochMetric& m) { return m.epoch > completed; });
        std::erase_if(result.schedule_trace,
                      [&](const ScheduleTraceRow& r) { return r.epoch > completed; });
        result.val_primary_probs.resize(completed);
        result.test_primary_probs.resize(completed);
    }

    // Best epoch by validation primary AUC, earliest on ties.
    double best = -1.0;
    for (const auto& m : result.per_epoch) {
        if (m.split == Split::Val && m.task == 0 && std::isfinite(m.auc) && m.auc > best) {
            best = m.auc;
            result.selected_epoch = static_cast<long>(m.epoch);
        }
    }
    if (result.selected_epoch > 0) {
        result.test_auc_primary =
            result.metric_at(static_cast<std::size_t>(result.selected_epoch), Split::Test, 0);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

GridOutcome run_grid(const GridConfig& grid) {
    if (grid.experiments.empty()) throw ConfigError("grid has no experiments");
    const DataRef& shared = grid.experiments.front().data;
    for (const auto& cfg : grid.experiments) {
        if (!(cfg.data == shared)) {
            throw ConfigError("experiment '" + cfg.name +
                              "' uses a different dataset; grid experiments must share one");
        }
    }
    std::map<std::string, int> name_counts;
    for (const auto& cfg : grid.experiments) {
        if (++name_counts[cfg.name] > 1) {
            throw ConfigError("duplicate experiment name '" + cfg.name + "' in grid");
        }
    }

    const Dataset dataset = materialize_data(shared);
    const SplitIndices splits = split_dataset(dataset, split_spec_of(shared));

    GridOutcome outcome;
    outcome.resolved.options = grid.options;
    for (const auto& cfg : grid.experiments) {
        ExperimentConfig resolved = resolve_experiment(cfg);
        if (resolved.model.input_dim == 0) resolved.model.input_dim = dataset.feature_dim;
        outcome.resolved.experiments.push_back(std::move(resolved));
    }
    outcome.runs.resize(grid.experiments.size());
    const std::size_t jobs = std::max<std::size_t>(1, grid.options.jobs);
    if (jobs == 1 || grid.experiments.size() == 1) {
        for (std::size_t i = 0; i < grid.experiments.size(); ++i) {
            outcome.runs[i] = run_experiment_on(grid.experiments[i], dataset, splits);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const std::size_t n_workers = std::min(jobs, grid.experiments.size());
        std::vector<std::exception_ptr> errors(grid.experiments.size());
        for (std::size_t w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= grid.experiments.size()) return;
                    try {
                        outcome.runs[i] = run_experiment_on(grid.experiments[i], dataset, splits);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    // Aggregation: a deterministic fold over the name-sorted runs, reported
    // back in declaration order.
    std::map<std::string, const RunResult*> by_name;
    std::map<std::string, const ExperimentConfig*> cfg_by_name;
    for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
        by_name[outcome.runs[i].name] = &outcome.runs[i];
        cfg_by_name[grid.experiments[i].name] = &grid.experiments[i];
    }

    const RunResult* stl_run = nullptr;
    std::size_t stl_count = 0;
    for (const auto& [name, run] : by_name) {
        if (cfg_by_name.at(name)->mode == RunMode::Stl) {
            ++stl_count;
            stl_run = run;
        }
    }
    if (stl_count != 1) stl_run = nullptr;  // no unique baseline, no p-values

    std::map<std::string, GridSummaryRow> rows;
    for (const auto& [name, run] : by_name) {
        GridSummaryRow row;
        row.name = name;
        row.failed = run->failed;
        row.selected_epoch = run->selected_epoch;
        if (run->selected_epoch > 0) {
            const auto epoch = static_cast<std::size_t>(run->selected_epoch);
            row.auc_train_primary = run->metric_at(epoch, Split::Train, 0);
            row.auc_val_primary = run->metric_at(epoch, Split::Val, 0);
            row.auc_test_primary = run->metric_at(epoch, Split::Test, 0);
            for (std::size_t t = 1; t < kTaskCount; ++t) {
                row.aux_test_auc[t - 1] = run->metric_at(epoch, Split::Test, t);
            }
        } else {
            row.aux_test_auc.fill(kNaN);
        }

        const bool qualifies = stl_run != nullptr && run != stl_run &&
                               std::isfinite(row.auc_test_primary) &&
                               std::isfinite(stl_run->test_auc_primary) &&
                               row.auc_test_primary > stl_run->test_auc_primary;
        if (qualifies) {
            if (run->test_ids != stl_run->test_ids) {
                throw ConfigError("paired test ids diverge between '" + name + "' and the baseline");
            }
            const auto& probs = run->test_primary_probs[static_cast<std::size_t>(
                run->selected_epoch - 1)];
            const auto& stl_probs = stl_run->test_primary_probs[static_cast<std::size_t>(
                stl_run->selected_epoch - 1)];
            std::vector<int> pred_a, pred_b, truth;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                if (!is_coded(run->test_primary_labels[i])) continue;
                pred_a.push_back(probs[i] > grid.options.mcnemar_threshold ? 1 : 0);
                pred_b.push_back(stl_probs[i] > grid.options.mcnemar_threshold ? 1 : 0);
                truth.push_back(run->test_primary_labels[i]);
            }
            row.vs_stl = mcnemar(pred_a, pred_b, truth);
        }
        rows[name] = std::move(row);
    }

    for (const auto& cfg : grid.experiments) {
        outcome.summary.rows.push_back(rows.at(cfg.name));
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void write_results_csv(const RunResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "epoch,split,task,auc,loss\n";
    for (const auto& m : result.per_epoch) {
        out << m.epoch << ',' << split_name(m.split) << ',' << kTaskNames[m.task] << ','
            << fmt(m.auc) << ',' << fmt(m.loss) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_roc_csv(const std::vector<double>& probs, const std::vector<int>& labels,
                   const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "threshold,fpr,tpr\n";
    for (const auto& p : roc_curve(probs, labels)) {
        out << fmt(p.threshold) << ',' << fmt(p.false_positive_rate) << ','
            << fmt(p.true_positive_rate) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void emit_outputs(RunResult& result, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    write_results_csv(result, dir / ("results_" + result.name + ".csv"));

    if (result.selected_epoch > 0) {
        const auto idx = static_cast<std::size_t>(result.selected_epoch - 1);
        write_roc_csv(result.val_primary_probs[idx], result.val_primary_labels,
                      dir / ("roc_" + result.name + "_val.csv"));
        write_roc_csv(result.test_primary_probs[idx], result.test_primary_labels,
                      dir / ("roc_" + result.name + "_test.csv"));
    }

    const auto trace_path = dir / ("schedule_" + result.name + ".csv");
    write_schedule_trace(result.schedule_trace, kTaskCount, trace_path.string());
    result.schedule_trace_path = trace_path.string();
}

void emit_outputs(GridOutcome& outcome, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    for (auto& run : outcome.runs) emit_outputs(run, out_dir);

    auto summary = open_out(dir / "summary.csv");
    summary << "name,status,selected_epoch,auc_train_LC,auc_val_LC,auc_test_LC,"
               "auc_test_AA,auc_test_CB,auc_test_COPD,auc_test_E,mcnemar_p_vs_stl\n";
    for (const auto& row : outcome.summary.rows) {
        summary << row.name << ',' << (row.failed ? "failed" : "ok") << ',' << row.selected_epoch
                << ',' << fmt(row.auc_train_primary) << ',' << fmt(row.auc_val_primary) << ','
                << fmt(row.auc_test_primary);
        for (double a : row.aux_test_auc) summary << ',' << fmt(a);
        summary << ',' << (row.vs_stl ? fmt(row.vs_stl->p_value) : "") << '\n';
    }
    if (!summary) throw IoError("failed writing summary.csv");

    auto mc = open_out(dir / "mcnemar.csv");
    mc << "name,b,c,chi2,p\n";
    for (const auto& row : outcome.summary.rows) {
        if (!row.vs_stl) continue;
        mc << row.name << ',' << row.vs_stl->b << ',' << row.vs_stl->c << ','
           << fmt(row.vs_stl->chi2) << ',' << fmt(row.vs_stl->p_value) << '\n';
    }
    if (!mc) throw IoError("failed writing mcnemar.csv");

    if (!outcome.resolved.experiments.empty()) {
        write_manifest(outcome.resolved, (dir / "manifest.json").string());
    }
}

}  // namespace mtlw
