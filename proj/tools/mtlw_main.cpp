#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mtlw/config.hpp"
#include "mtlw/data.hpp"
#include "mtlw/errors.hpp"
#include "mtlw/harness.hpp"

namespace {

void override_seed(mtlw::ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed) {
    if (seed) cfg.training.seed = *seed;
}

int cmd_synth(const std::string& config_path, const std::string& out_path,
              const std::optional<std::uint64_t>& seed) {
    mtlw::SynthConfig synth = mtlw::synth_from_ini(mtlw::IniFile::load(config_path));
    if (seed) synth.seed = *seed;
    const mtlw::Dataset data = mtlw::synth_generate(synth);
    mtlw::save_csv(data, out_path);
    std::printf("wrote %zu samples (%zu features) to %s\n", data.size(), data.feature_dim,
                out_path.c_str());
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed) {
    mtlw::ExperimentConfig cfg = mtlw::load_run_config(config_path);
    override_seed(cfg, seed);

    mtlw::RunResult result = mtlw::run_experiment(cfg);
    mtlw::emit_outputs(result, out_dir);

    mtlw::GridConfig single;
    single.experiments.push_back(mtlw::resolve_experiment(cfg));
    mtlw::write_manifest(single, (std::filesystem::path(out_dir) / "manifest.json").string());

    if (result.failed) {
        std::fprintf(stderr, "run '%s' failed: %s\n", result.name.c_str(),
                     result.failure_reason.c_str());
        if (result.selected_epoch > 0) {
            std::fprintf(stderr, "best epoch before failure: %ld (test LC AUC %.4f)\n",
                         result.selected_epoch, result.test_auc_primary);
        }
        return 1;
    }
    std::printf("run '%s': selected epoch %ld, test LC AUC %.4f\n", result.name.c_str(),
                result.selected_epoch, result.test_auc_primary);
    return 0;
}

int cmd_grid(const std::string& config_path, const std::string& out_dir,
             const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& jobs) {
    mtlw::GridConfig grid = mtlw::load_grid_config(config_path);
    for (auto& cfg : grid.experiments) override_seed(cfg, seed);
    if (jobs) grid.options.jobs = *jobs;

    mtlw::GridOutcome outcome = mtlw::run_grid(grid);
    mtlw::emit_outputs(outcome, out_dir);

    for (const auto& row : outcome.summary.rows) {
        char pcol[32] = "";
        if (row.vs_stl) std::snprintf(pcol, sizeof(pcol), "  p=%.4g", row.vs_stl->p_value);
        std::printf("%-6s %s epoch %3ld  test LC AUC %.4f%s\n", row.name.c_str(),
                    row.failed ? "FAILED" : "ok    ", row.selected_epoch, row.auc_test_primary,
                    pcol);
    }
    std::printf("outputs in %s\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-task loss-weighting experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort CSV");
    synth->add_option("--config", config_path, "INI config with a [data] section")->required();
    synth->add_option("--out", out_path, "output CSV path")->required();
    synth->add_option("--seed", seed, "override the generator seed");

    CLI::App* run = app.add_subcommand("run", "train one experiment");
    run->add_option("--config", config_path, "INI config or single-experiment manifest")
        ->required();
    run->add_option("--out", out_path, "output directory")->required();
    run->add_option("--seed", seed, "override the training seed");

    CLI::App* grid = app.add_subcommand("grid", "train a grid of experiments");
    grid->add_option("--config", config_path, "INI config or manifest")->required();
    grid->add_option("--out", out_path, "output directory")->required();
    grid->add_option("--seed", seed, "override every training seed");
    grid->add_option("--jobs", jobs, "concurrent experiments");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(config_path, out_path, seed);
        if (run->parsed()) return cmd_run(config_path, out_path, seed);
        return cmd_grid(config_path, out_path, seed, jobs);
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
}
