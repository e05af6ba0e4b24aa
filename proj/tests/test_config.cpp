#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mtlw/config.hpp"
#include "mtlw/errors.hpp"

using namespace mtlw;

namespace {

std::filesystem::path write_temp(const char* name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("ini parsing: sections, comments, trimming") {
    const auto ini = IniFile::parse_text(
        "# leading comment\n"
        "[experiment]\n"
        "  name =  spaced out  \n"
        "; another comment\n"
        "[training]\n"
        "max_epochs = 30\n");
    CHECK(ini.has("experiment", "name"));
    CHECK(ini.has("training", "max_epochs"));
    CHECK_FALSE(ini.has("training", "batch_size"));
    auto copy = ini;
    CHECK(*copy.take("experiment", "name") == "spaced out");
    CHECK(*copy.take_size("training", "max_epochs") == 30);
}

TEST_CASE("ini parsing errors carry line numbers") {
    CHECK_THROWS_WITH_AS(IniFile::parse_text("key = 1\n"),
                         doctest::Contains(":1:"), ParseError);
    CHECK_THROWS_WITH_AS(IniFile::parse_text("[a]\nnot a pair\n"),
                         doctest::Contains(":2:"), ParseError);
    CHECK_THROWS_WITH_AS(IniFile::parse_text("[a]\nx = 1\nx = 2\n"),
                         doctest::Contains("duplicate"), ParseError);
    CHECK_THROWS_AS(IniFile::parse_text("[a\nx = 1\n"), ParseError);
}

TEST_CASE("typed takes validate their values") {
    auto ini = IniFile::parse_text(
        "[training]\n"
        "learning_rate = fast\n"
        "batch_size = -3\n"
        "max_epochs = 10\n");
    CHECK_THROWS_WITH_AS(ini.take_double("training", "learning_rate"),
                         doctest::Contains("not a number"), ConfigError);
    CHECK_THROWS_AS(ini.take_size("training", "batch_size"), ConfigError);
    CHECK(*ini.take_size("training", "max_epochs") == 10);
    CHECK_FALSE(ini.take_double("training", "absent").has_value());
}

TEST_CASE("unknown keys and sections are rejected") {
    const auto path = write_temp("mtlw_cfg_unknown.ini",
                                 "[training]\n"
                                 "max_epoch = 10\n");  // typo: max_epoch
    CHECK_THROWS_WITH_AS(experiment_from_ini(IniFile::load(path.string())),
                         doctest::Contains("max_epoch"), ConfigError);

    const auto path2 = write_temp("mtlw_cfg_section.ini",
                                  "[tuning]\n"
                                  "max_epochs = 10\n");
    CHECK_THROWS_WITH_AS(experiment_from_ini(IniFile::load(path2.string())),
                         doctest::Contains("[tuning]"), ConfigError);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("experiment defaults without any file content") {
    const ExperimentConfig cfg = experiment_from_ini(IniFile::parse_text(""));
    CHECK(cfg.name == "run");
    CHECK(cfg.mode == RunMode::Mtl);
    CHECK(cfg.base_weights == std::vector<double>{3, 1, 1, 1, 1});
    CHECK_FALSE(cfg.pflp.enabled);
    CHECK(cfg.itw.mode == ItwMode::Off);
    CHECK(cfg.training.batch_size == 4);
    CHECK(cfg.training.learning_rate == 0.0001);
    REQUIRE(std::holds_alternative<SynthDataRef>(cfg.data));
    const auto& synth = std::get<SynthDataRef>(cfg.data);
    CHECK(synth.synth.n_total == 3386);
    CHECK(synth.split.train == 2517);
    CHECK(synth.split.val == 277);
    CHECK(synth.split.test == 592);
}

TEST_CASE("preset then explicit keys: later sections win") {
    const ExperimentConfig cfg = experiment_from_ini(IniFile::parse_text(
        "[experiment]\n"
        "preset = mtl3\n"
        "name = tuned\n"
        "[weights]\n"
        "base = 3, 2, 2, 2, 2\n"
        "[pflp]\n"
        "window_iterations = 10\n"
        "[training]\n"
        "seed = 9\n"));
    CHECK(cfg.name == "tuned");
    CHECK(cfg.base_weights == std::vector<double>{3, 2, 2, 2, 2});
    CHECK(cfg.pflp.enabled);  // from the preset
    CHECK(cfg.pflp.window_iterations == 10);
    CHECK(cfg.training.seed == 9);
}

TEST_CASE("every named preset resolves to its table row") {
    auto expect = [](const char* name, RunMode mode, std::vector<double> weights, bool pflp,
                     ItwMode itw) {
        ExperimentConfig cfg;
        apply_preset(cfg, name);
        CHECK(cfg.name == name);
        CHECK(cfg.mode == mode);
        CHECK(cfg.base_weights == weights);
        CHECK(cfg.pflp.enabled == pflp);
        CHECK(cfg.itw.mode == itw);
    };
    expect("stl", RunMode::Stl, {3, 0, 0, 0, 0}, false, ItwMode::Off);
    expect("mtl", RunMode::Mtl, {3, 3, 3, 3, 3}, false, ItwMode::Off);
    expect("mtl0", RunMode::Mtl, {3, 0.01, 0.01, 0.01, 0.01}, true, ItwMode::Off);
    expect("mtl1", RunMode::Mtl, {3, 0.1, 0.1, 0.1, 0.1}, true, ItwMode::Off);
    expect("mtl2", RunMode::Mtl, {3, 1, 1, 1, 1}, true, ItwMode::Off);
    expect("mtl3", RunMode::Mtl, {3, 3, 3, 3, 3}, true, ItwMode::Off);
    expect("mtl4", RunMode::Mtl, {3, 6, 6, 6, 6}, true, ItwMode::Off);
    expect("itw1", RunMode::Mtl, {3, 3, 3, 3, 3}, false, ItwMode::Auto);
    expect("itw2", RunMode::Mtl, {3, 1, 1, 1, 1}, true, ItwMode::Auto);
    expect("itw3", RunMode::Mtl, {3, 3, 3, 3, 3}, true, ItwMode::Auto);
    ExperimentConfig cfg;
    CHECK_THROWS_AS(apply_preset(cfg, "mtl9"), ConfigError);
}

TEST_CASE("stl resolution zeroes auxiliaries and disables the policies") {
    ExperimentConfig cfg;
    cfg.mode = RunMode::Stl;
    cfg.base_weights = {3, 2, 2, 2, 2};
    cfg.pflp.enabled = true;
    cfg.itw.mode = ItwMode::Auto;
    const ExperimentConfig r = resolve_experiment(cfg);
    CHECK(r.base_weights == std::vector<double>{3, 0, 0, 0, 0});
    CHECK_FALSE(r.pflp.enabled);
    CHECK(r.itw.mode == ItwMode::Off);
}

TEST_CASE("model seed inherits the training seed only when unset") {
    ExperimentConfig cfg;
    cfg.training.seed = 42;
    CHECK(resolve_experiment(cfg).model.seed == 42);
    cfg.model.seed = 7;
    CHECK(resolve_experiment(cfg).model.seed == 7);
}

TEST_CASE("csv data source requires a path and explicit split counts") {
    CHECK_THROWS_WITH_AS(experiment_from_ini(IniFile::parse_text("[data]\nsource = csv\n")),
                         doctest::Contains("csv_path"), ConfigError);
    CHECK_THROWS_AS(
        experiment_from_ini(IniFile::parse_text("[data]\nsource = csv\ncsv_path = d.csv\n")),
        ConfigError);
    const ExperimentConfig cfg = experiment_from_ini(IniFile::parse_text(
        "[data]\n"
        "source = csv\n"
        "csv_path = d.csv\n"
        "train = 6\n"
        "val = 2\n"
        "test = 2\n"));
    REQUIRE(std::holds_alternative<CsvDataRef>(cfg.data));
    CHECK(std::get<CsvDataRef>(cfg.data).path == "d.csv");
    CHECK(std::get<CsvDataRef>(cfg.data).split.train == 6);
}

TEST_CASE("non-default n_total needs explicit split counts") {
    CHECK_THROWS_AS(experiment_from_ini(IniFile::parse_text("[data]\nn_total = 500\n")),
                    ConfigError);
    const ExperimentConfig cfg = experiment_from_ini(IniFile::parse_text(
        "[data]\nn_total = 500\ntrain = 300\nval = 100\ntest = 100\n"));
    CHECK(std::get<SynthDataRef>(cfg.data).split.train == 300);
}

TEST_CASE("grid config expands its presets over shared sections") {
    const GridConfig grid = grid_from_ini(IniFile::parse_text(
        "[grid]\n"
        "presets = stl, mtl3\n"
        "jobs = 2\n"
        "[data]\n"
        "seed = 5\n"
        "[training]\n"
        "max_epochs = 3\n"
        "seed = 8\n"));
    REQUIRE(grid.experiments.size() == 2);
    CHECK(grid.options.jobs == 2);
    CHECK(grid.experiments[0].name == "stl");
    CHECK(grid.experiments[1].name == "mtl3");
    for (const auto& cfg : grid.experiments) {
        CHECK(cfg.training.max_epochs == 3);
        CHECK(cfg.training.seed == 8);
        CHECK(std::get<SynthDataRef>(cfg.data).synth.seed == 5);
    }
}

TEST_CASE("grid without a presets key uses every built-in preset") {
    const GridConfig grid = grid_from_ini(IniFile::parse_text(""));
    CHECK(grid.experiments.size() == preset_table().size());
    CHECK(grid.experiments.front().name == "stl");
}

TEST_CASE("grid configs reject per-experiment policy sections") {
    CHECK_THROWS_WITH_AS(grid_from_ini(IniFile::parse_text("[pflp]\nenabled = true\n")),
                         doctest::Contains("presets"), ConfigError);
    CHECK_THROWS_AS(grid_from_ini(IniFile::parse_text("[weights]\nbase = 3,1,1,1,1\n")),
                    ConfigError);
}

TEST_CASE("synth command config: [data] only, synth source only") {
    auto ini = IniFile::parse_text("[data]\nseed = 3\nn_total = 40\ntrain = 20\nval = 10\ntest = 10\n");
    const SynthConfig synth = synth_from_ini(ini);
    CHECK(synth.seed == 3);
    CHECK(synth.n_total == 40);
    CHECK_THROWS_AS(synth_from_ini(IniFile::parse_text("[data]\nsource = csv\ncsv_path = x\n")),
                    ConfigError);
    CHECK_THROWS_AS(synth_from_ini(IniFile::parse_text("[training]\nseed = 3\n")), ConfigError);
}

TEST_CASE("manifest round-trips a grid config exactly") {
    GridConfig grid = grid_from_ini(IniFile::parse_text(
        "[grid]\npresets = stl, mtl1, itw2\n[data]\nseed = 11\n[training]\nseed = 4\n"));
    grid.experiments[2].itw.mode = ItwMode::FixedEpoch;
    grid.experiments[2].itw.fixed_epoch = 17;
    grid.options.mcnemar_threshold = 0.4;

    const auto path = std::filesystem::temp_directory_path() / "mtlw_manifest_rt.json";
    write_manifest(grid, path.string());
    const GridConfig back = read_manifest(path.string());

    REQUIRE(back.experiments.size() == 3);
    CHECK(back.options.mcnemar_threshold == 0.4);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& a = grid.experiments[i];
        const auto& b = back.experiments[i];
        CHECK(a.name == b.name);
        CHECK(a.mode == b.mode);
        CHECK(a.base_weights == b.base_weights);
        CHECK(a.pos_weights == b.pos_weights);
        CHECK(a.pflp.enabled == b.pflp.enabled);
        CHECK(a.pflp.window_iterations == b.pflp.window_iterations);
        CHECK(a.pflp.damping_factor == b.pflp.damping_factor);
        CHECK(a.itw.mode == b.itw.mode);
        CHECK(a.itw.fixed_epoch == b.itw.fixed_epoch);
        CHECK(a.training.seed == b.training.seed);
        CHECK(a.training.learning_rate == b.training.learning_rate);
        CHECK(a.model.encoder_layers == b.model.encoder_layers);
        CHECK(a.data == b.data);
    }
    std::filesystem::remove(path);
}

TEST_CASE("manifest files are sniffed by extension and content") {
    const auto ini_path = write_temp("mtlw_sniff.ini", "[grid]\npresets = stl\n");
    CHECK_FALSE(is_manifest_path(ini_path.string()));
    const auto json_as_ini = write_temp("mtlw_sniff2.cfg", "  {\"format\": \"x\"}");
    CHECK(is_manifest_path(json_as_ini.string()));
    CHECK(is_manifest_path("whatever.json"));
    std::filesystem::remove(ini_path);
    std::filesystem::remove(json_as_ini);
}

TEST_CASE("manifests with the wrong format marker are rejected") {
    const auto path = write_temp("mtlw_badmanifest.json", "{\"format\": \"other\"}");
    CHECK_THROWS_AS(read_manifest(path.string()), ConfigError);
    const auto path2 = write_temp("mtlw_badjson.json", "{nope");
    CHECK_THROWS_AS(read_manifest(path2.string()), ParseError);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("run command loader accepts only single-experiment manifests") {
    GridConfig grid = grid_from_ini(IniFile::parse_text("[grid]\npresets = stl, mtl\n"));
    const auto path = std::filesystem::temp_directory_path() / "mtlw_two.json";
    write_manifest(grid, path.string());
    CHECK_THROWS_AS(load_run_config(path.string()), ConfigError);

    grid.experiments.resize(1);
    write_manifest(grid, path.string());
    CHECK(load_run_config(path.string()).name == "stl");
    std::filesystem::remove(path);
}
