#include "mtlw/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mtlw/errors.hpp"

namespace mtlw {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) parts.push_back(trim(item));
    if (!value.empty() && value.back() == ',') parts.emplace_back();
    return parts;
}

}  // namespace

// ---------------------------------------------------------------------------
// IniFile
// ---------------------------------------------------------------------------

void IniFile::fail(std::size_t line, const std::string& message) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + message);
}

IniFile IniFile::parse_text(const std::string& text, const std::string& origin) {
    IniFile ini;
    ini.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ParseError(origin + ":" + std::to_string(line_no) +
                                 ": malformed section header '" + line + "'");
            }
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) {
                throw ParseError(origin + ":" + std::to_string(line_no) +
                                 ": empty section name");
            }
            auto [it, inserted] = ini.sections_.try_emplace(current);
            if (inserted) it->second.line = line_no;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
        }
        if (current.empty()) {
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": key outside of any [section]");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        auto& section = ini.sections_[current];
        auto [it, inserted] = section.entries.try_emplace(key, Entry{value, line_no, false});
        if (!inserted) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                             "' in [" + current + "] (first at line " +
                             std::to_string(it->second.line) + ")");
        }
    }
    return ini;
}

IniFile IniFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

bool IniFile::has_section(const std::string& section) const {
    return sections_.count(section) != 0;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    return peek(section, key) != nullptr;
}

const IniFile::Entry* IniFile::peek(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.entries.find(key);
    return kit == sit->second.entries.end() ? nullptr : &kit->second;
}

IniFile::Entry* IniFile::consume(const std::string& section, const std::string& key) {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.entries.find(key);
    if (kit == sit->second.entries.end()) return nullptr;
    kit->second.used = true;
    return &kit->second;
}

std::optional<std::string> IniFile::take(const std::string& section, const std::string& key) {
    Entry* e = consume(section, key);
    if (!e) return std::nullopt;
    if (e->value.empty()) fail(e->line, "[" + section + "] " + key + ": empty value");
    return e->value;
}

std::optional<double> IniFile::take_double(const std::string& section, const std::string& key) {
    Entry* e = consume(section, key);
    if (!e) return std::nullopt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail(e->line, "[" + section + "] " + key + ": '" + e->value + "' is not a number");
    }
}

std::optional<std::uint64_t> IniFile::take_u64(const std::string& section, const std::string& key) {
    Entry* e = consume(section, key);
    if (!e) return std::nullopt;
    try {
        if (!e->value.empty() && e->value[0] == '-') throw std::invalid_argument("");
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail(e->line,
             "[" + section + "] " + key + ": '" + e->value + "' is not a non-negative integer");
    }
}

std::optional<std::size_t> IniFile::take_size(const std::string& section, const std::string& key) {
    const auto v = take_u64(section, key);
    if (!v) return std::nullopt;
    return static_cast<std::size_t>(*v);
}

std::optional<bool> IniFile::take_bool(const std::string& section, const std::string& key) {
    Entry* e = consume(section, key);
    if (!e) return std::nullopt;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    fail(e->line, "[" + section + "] " + key + ": expected true/false, got '" + e->value + "'");
}

std::optional<std::vector<double>> IniFile::take_doubles(const std::string& section,
                                                         const std::string& key) {
    Entry* e = consume(section, key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    for (const std::string& item : split_list(e->value)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            fail(e->line, "[" + section + "] " + key + ": '" + item + "' is not a number");
        }
    }
    return out;
}

std::optional<std::vector<std::size_t>> IniFile::take_sizes(const std::string& section,
                                                            const std::string& key) {
    Entry* e = consume(section, key);
    if (!e) return std::nullopt;
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(e->value)) {
        try {
            if (!item.empty() && item[0] == '-') throw std::invalid_argument("");
            std::size_t pos = 0;
            out.push_back(static_cast<std::size_t>(std::stoull(item, &pos)));
            if (pos != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            fail(e->line,
                 "[" + section + "] " + key + ": '" + item + "' is not a non-negative integer");
        }
    }
    return out;
}

void IniFile::allow_section(const std::string& section) {
    auto it = sections_.find(section);
    if (it != sections_.end()) it->second.allowed = true;
}

void IniFile::finish() const {
    for (const auto& [name, section] : sections_) {
        if (!section.allowed) {
            fail(section.line, "section [" + name + "] is not recognized here");
        }
        for (const auto& [key, entry] : section.entries) {
            if (!entry.used) fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
        }
    }
}

// ---------------------------------------------------------------------------
// INI -> config builders
// ---------------------------------------------------------------------------

namespace {

SynthConfig synth_section(IniFile& ini) {
    SynthConfig synth;
    if (auto v = ini.take_size("data", "n_total")) synth.n_total = *v;
    if (auto v = ini.take_double("data", "cohort_b_fraction")) synth.cohort_b_fraction = *v;
    if (auto v = ini.take_size("data", "feature_dim")) synth.feature_dim = *v;
    if (auto v = ini.take_double("data", "shared_signal")) synth.shared_signal = *v;
    if (auto v = ini.take_double("data", "task_signal")) synth.task_signal = *v;
    if (auto v = ini.take_double("data", "interference")) synth.interference = *v;
    if (auto v = ini.take_doubles("data", "prevalence_targets")) {
        if (v->size() != kTaskCount) {
            throw ConfigError(ini.origin() + ": [data] prevalence_targets needs " +
                              std::to_string(kTaskCount) + " comma-separated values");
        }
        std::copy(v->begin(), v->end(), synth.prevalence_targets.begin());
    }
    if (auto v = ini.take_u64("data", "seed")) synth.seed = *v;
    if (auto v = ini.take_u64("data", "label_seed")) synth.label_seed = *v;
    if (auto v = ini.take_double("data", "label_flip_prob")) synth.label_flip_prob = *v;
    if (auto v = ini.take_double("data", "feature_jitter_sd")) synth.feature_jitter_sd = *v;
    return synth;
}

SplitSpec split_section(IniFile& ini, std::size_t n_total) {
    SplitSpec split;
    const bool partial = ini.has("data", "train") || ini.has("data", "val") ||
                         ini.has("data", "test");
    if (partial) {
        const auto need = [&](const char* key) {
            auto v = ini.take_size("data", key);
            if (!v) {
                throw ConfigError(ini.origin() +
                                  ": [data] train/val/test must be given together");
            }
            return *v;
        };
        split.train = need("train");
        split.val = need("val");
        split.test = need("test");
    } else if (n_total != 3386) {
        throw ConfigError(ini.origin() + ": [data] n_total " + std::to_string(n_total) +
                          " requires explicit train/val/test counts");
    }
    if (auto v = ini.take_u64("data", "split_seed")) split.seed = *v;
    return split;
}

DataRef data_sections(IniFile& ini) {
    ini.allow_section("data");
    const std::string source = ini.take("data", "source").value_or("synth");
    if (source == "synth") {
        SynthDataRef ref;
        ref.synth = synth_section(ini);
        ref.split = split_section(ini, ref.synth.n_total);
        return ref;
    }
    if (source == "csv") {
        CsvDataRef ref;
        if (auto v = ini.take("data", "csv_path")) {
            ref.path = *v;
        } else {
            throw ConfigError(ini.origin() + ": [data] source=csv requires csv_path");
        }
        const auto need = [&](const char* key) {
            auto v = ini.take_size("data", key);
            if (!v) {
                throw ConfigError(ini.origin() +
                                  ": [data] source=csv requires explicit train/val/test counts");
            }
            return *v;
        };
        ref.split.train = need("train");
        ref.split.val = need("val");
        ref.split.test = need("test");
        if (auto v = ini.take_u64("data", "split_seed")) ref.split.seed = *v;
        return ref;
    }
    throw ConfigError(ini.origin() + ": [data] source must be synth or csv, got '" + source + "'");
}

void model_section(IniFile& ini, ModelConfig& model) {
    ini.allow_section("model");
    if (auto v = ini.take_size("model", "input_dim")) model.input_dim = *v;
    if (auto v = ini.take_sizes("model", "encoder_layers")) model.encoder_layers = *v;
    if (auto v = ini.take_sizes("model", "head_layers")) model.head_layers = *v;
    if (auto v = ini.take_size("model", "task_count")) model.task_count = *v;
    if (auto v = ini.take_u64("model", "seed")) model.seed = *v;
}

void training_section(IniFile& ini, TrainingConfig& training) {
    ini.allow_section("training");
    if (auto v = ini.take_double("training", "learning_rate")) training.learning_rate = *v;
    if (auto v = ini.take_size("training", "batch_size")) training.batch_size = *v;
    if (auto v = ini.take_size("training", "max_epochs")) training.max_epochs = *v;
    if (auto v = ini.take_u64("training", "seed")) training.seed = *v;
}

void weights_section(IniFile& ini, ExperimentConfig& cfg) {
    ini.allow_section("weights");
    if (auto v = ini.take_doubles("weights", "base")) cfg.base_weights = *v;
    if (auto v = ini.take_doubles("weights", "pos")) cfg.pos_weights = *v;
}

void pflp_section(IniFile& ini, PflpConfig& pflp) {
    ini.allow_section("pflp");
    if (auto v = ini.take_bool("pflp", "enabled")) pflp.enabled = *v;
    if (auto v = ini.take_size("pflp", "window_iterations")) pflp.window_iterations = *v;
    if (auto v = ini.take_double("pflp", "damping_factor")) pflp.damping_factor = *v;
    if (auto v = ini.take_sizes("pflp", "focus_order")) pflp.focus_order = *v;
}

void itw_section(IniFile& ini, ItwConfig& itw) {
    ini.allow_section("itw");
    if (auto v = ini.take("itw", "mode")) {
        if (*v == "off") {
            itw.mode = ItwMode::Off;
        } else if (*v == "auto") {
            itw.mode = ItwMode::Auto;
        } else if (*v == "fixed_epoch") {
            itw.mode = ItwMode::FixedEpoch;
        } else {
            throw ConfigError(ini.origin() + ": [itw] mode must be off, auto or fixed_epoch");
        }
    }
    if (auto v = ini.take_double("itw", "aux_weight")) itw.aux_weight = *v;
    if (auto v = ini.take_size("itw", "patience_epochs")) itw.patience_epochs = *v;
    if (auto v = ini.take_double("itw", "min_delta")) itw.min_delta = *v;
    if (auto v = ini.take_u64("itw", "fixed_epoch")) itw.fixed_epoch = *v;
}

RunMode parse_mode(const std::string& origin, const std::string& text) {
    if (text == "stl") return RunMode::Stl;
    if (text == "mtl") return RunMode::Mtl;
    throw ConfigError(origin + ": [experiment] mode must be stl or mtl, got '" + text + "'");
}

}  // namespace

SynthConfig synth_from_ini(IniFile ini) {
    ini.allow_section("data");
    if (const auto source = ini.take("data", "source"); source && *source != "synth") {
        throw ConfigError(ini.origin() + ": the synth command needs [data] source=synth");
    }
    SynthConfig synth = synth_section(ini);
    // split keys are legal in the same file; synth itself ignores them
    ini.take_size("data", "train");
    ini.take_size("data", "val");
    ini.take_size("data", "test");
    ini.take_u64("data", "split_seed");
    ini.finish();
    synth.validate();
    return synth;
}

ExperimentConfig experiment_from_ini(IniFile ini) {
    ExperimentConfig cfg;
    ini.allow_section("experiment");
    if (auto preset = ini.take("experiment", "preset")) apply_preset(cfg, *preset);
    if (auto name = ini.take("experiment", "name")) cfg.name = *name;
    if (auto mode = ini.take("experiment", "mode")) cfg.mode = parse_mode(ini.origin(), *mode);

    cfg.data = data_sections(ini);
    model_section(ini, cfg.model);
    training_section(ini, cfg.training);
    weights_section(ini, cfg);
    pflp_section(ini, cfg.pflp);
    itw_section(ini, cfg.itw);
    ini.finish();
    return cfg;
}

GridConfig grid_from_ini(IniFile ini) {
    for (const char* banned : {"weights", "pflp", "itw", "experiment"}) {
        if (ini.has_section(banned)) {
            throw ConfigError(ini.origin() + ": grid configs take [" + std::string(banned) +
                              "] settings from presets; remove the section");
        }
    }

    GridConfig grid;
    ini.allow_section("grid");
    std::vector<std::string> presets = preset_names();
    if (auto v = ini.take("grid", "presets")) {
        presets = split_list(*v);
        if (presets.empty()) throw ConfigError(ini.origin() + ": [grid] presets is empty");
    }
    if (auto v = ini.take_size("grid", "jobs")) grid.options.jobs = *v;
    if (auto v = ini.take_double("grid", "mcnemar_threshold")) grid.options.mcnemar_threshold = *v;

    ExperimentConfig shared;
    shared.data = data_sections(ini);
    model_section(ini, shared.model);
    training_section(ini, shared.training);
    ini.finish();

    for (const std::string& name : presets) {
        ExperimentConfig cfg = shared;
        apply_preset(cfg, name);
        grid.experiments.push_back(std::move(cfg));
    }
    return grid;
}

// ---------------------------------------------------------------------------
// JSON manifest
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kManifestFormat = "mtlw-manifest-v1";

ordered_json synth_to_json(const SynthConfig& s) {
    return ordered_json{{"n_total", s.n_total},
                        {"cohort_b_fraction", s.cohort_b_fraction},
                        {"feature_dim", s.feature_dim},
                        {"shared_signal", s.shared_signal},
                        {"task_signal", s.task_signal},
                        {"interference", s.interference},
                        {"prevalence_targets", s.prevalence_targets},
                        {"seed", s.seed},
                        {"label_seed", s.label_seed},
                        {"label_flip_prob", s.label_flip_prob},
                        {"feature_jitter_sd", s.feature_jitter_sd}};
}

SynthConfig synth_from_json(const ordered_json& j) {
    SynthConfig s;
    j.at("n_total").get_to(s.n_total);
    j.at("cohort_b_fraction").get_to(s.cohort_b_fraction);
    j.at("feature_dim").get_to(s.feature_dim);
    j.at("shared_signal").get_to(s.shared_signal);
    j.at("task_signal").get_to(s.task_signal);
    j.at("interference").get_to(s.interference);
    j.at("prevalence_targets").get_to(s.prevalence_targets);
    j.at("seed").get_to(s.seed);
    j.at("label_seed").get_to(s.label_seed);
    j.at("label_flip_prob").get_to(s.label_flip_prob);
    j.at("feature_jitter_sd").get_to(s.feature_jitter_sd);
    return s;
}

ordered_json split_to_json(const SplitSpec& s) {
    return ordered_json{{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}};
}

SplitSpec split_from_json(const ordered_json& j) {
    SplitSpec s;
    j.at("train").get_to(s.train);
    j.at("val").get_to(s.val);
    j.at("test").get_to(s.test);
    j.at("seed").get_to(s.seed);
    return s;
}

ordered_json data_to_json(const DataRef& ref) {
    if (const auto* synth = std::get_if<SynthDataRef>(&ref)) {
        return ordered_json{{"kind", "synth"},
                            {"synth", synth_to_json(synth->synth)},
                            {"split", split_to_json(synth->split)}};
    }
    const auto& csv = std::get<CsvDataRef>(ref);
    return ordered_json{{"kind", "csv"}, {"path", csv.path}, {"split", split_to_json(csv.split)}};
}

DataRef data_from_json(const ordered_json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "synth") {
        SynthDataRef ref;
        ref.synth = synth_from_json(j.at("synth"));
        ref.split = split_from_json(j.at("split"));
        return ref;
    }
    if (kind == "csv") {
        CsvDataRef ref;
        j.at("path").get_to(ref.path);
        ref.split = split_from_json(j.at("split"));
        return ref;
    }
    throw ConfigError("manifest data kind must be synth or csv, got '" + kind + "'");
}

const char* itw_mode_name(ItwMode mode) {
    switch (mode) {
        case ItwMode::Off: return "off";
        case ItwMode::Auto: return "auto";
        case ItwMode::FixedEpoch: return "fixed_epoch";
    }
    return "?";
}

ItwMode itw_mode_from(const std::string& text) {
    if (text == "off") return ItwMode::Off;
    if (text == "auto") return ItwMode::Auto;
    if (text == "fixed_epoch") return ItwMode::FixedEpoch;
    throw ConfigError("manifest itw mode must be off, auto or fixed_epoch, got '" + text + "'");
}

ordered_json experiment_to_json(const ExperimentConfig& cfg) {
    ordered_json itw{{"mode", itw_mode_name(cfg.itw.mode)},
                     {"aux_weight", cfg.itw.aux_weight},
                     {"patience_epochs", cfg.itw.patience_epochs},
                     {"min_delta", cfg.itw.min_delta}};
    if (cfg.itw.fixed_epoch) {
        itw["fixed_epoch"] = *cfg.itw.fixed_epoch;
    } else {
        itw["fixed_epoch"] = nullptr;
    }
    return ordered_json{
        {"name", cfg.name},
        {"mode", cfg.mode == RunMode::Stl ? "stl" : "mtl"},
        {"base_weights", cfg.base_weights},
        {"pos_weights", cfg.pos_weights},
        {"pflp",
         {{"enabled", cfg.pflp.enabled},
          {"window_iterations", cfg.pflp.window_iterations},
          {"damping_factor", cfg.pflp.damping_factor},
          {"focus_order", cfg.pflp.focus_order}}},
        {"itw", itw},
        {"training",
         {{"learning_rate", cfg.training.learning_rate},
          {"batch_size", cfg.training.batch_size},
          {"max_epochs", cfg.training.max_epochs},
          {"seed", cfg.training.seed}}},
        {"model",
         {{"input_dim", cfg.model.input_dim},
          {"encoder_layers", cfg.model.encoder_layers},
          {"head_layers", cfg.model.head_layers},
          {"task_count", cfg.model.task_count},
          {"seed", cfg.model.seed}}}};
}

ExperimentConfig experiment_from_json(const ordered_json& j, const DataRef& data) {
    ExperimentConfig cfg;
    j.at("name").get_to(cfg.name);
    cfg.mode = parse_mode("manifest", j.at("mode").get<std::string>());
    j.at("base_weights").get_to(cfg.base_weights);
    j.at("pos_weights").get_to(cfg.pos_weights);

    const auto& pflp = j.at("pflp");
    pflp.at("enabled").get_to(cfg.pflp.enabled);
    pflp.at("window_iterations").get_to(cfg.pflp.window_iterations);
    pflp.at("damping_factor").get_to(cfg.pflp.damping_factor);
    pflp.at("focus_order").get_to(cfg.pflp.focus_order);

    const auto& itw = j.at("itw");
    cfg.itw.mode = itw_mode_from(itw.at("mode").get<std::string>());
    itw.at("aux_weight").get_to(cfg.itw.aux_weight);
    itw.at("patience_epochs").get_to(cfg.itw.patience_epochs);
    itw.at("min_delta").get_to(cfg.itw.min_delta);
    if (itw.contains("fixed_epoch") && !itw.at("fixed_epoch").is_null()) {
        cfg.itw.fixed_epoch = itw.at("fixed_epoch").get<std::uint64_t>();
    }

    const auto& training = j.at("training");
    training.at("learning_rate").get_to(cfg.training.learning_rate);
    training.at("batch_size").get_to(cfg.training.batch_size);
    training.at("max_epochs").get_to(cfg.training.max_epochs);
    training.at("seed").get_to(cfg.training.seed);

    const auto& model = j.at("model");
    model.at("input_dim").get_to(cfg.model.input_dim);
    model.at("encoder_layers").get_to(cfg.model.encoder_layers);
    model.at("head_layers").get_to(cfg.model.head_layers);
    model.at("task_count").get_to(cfg.model.task_count);
    model.at("seed").get_to(cfg.model.seed);

    cfg.data = data;
    return cfg;
}

}  // namespace

void write_manifest(const GridConfig& grid, const std::string& path) {
    if (grid.experiments.empty()) throw ConfigError("manifest needs at least one experiment");
    ordered_json doc;
    doc["format"] = kManifestFormat;
    doc["data"] = data_to_json(grid.experiments.front().data);
    doc["options"] = ordered_json{{"jobs", grid.options.jobs},
                                  {"mcnemar_threshold", grid.options.mcnemar_threshold}};
    doc["experiments"] = ordered_json::array();
    for (const auto& cfg : grid.experiments) {
        doc["experiments"].push_back(experiment_to_json(cfg));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

GridConfig read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& err) {
        throw ParseError(path + ": " + err.what());
    }
    try {
        if (!doc.contains("format") || doc.at("format") != kManifestFormat) {
            throw ConfigError("not an " + std::string(kManifestFormat) + " document");
        }
        GridConfig grid;
        const DataRef data = data_from_json(doc.at("data"));
        const auto& options = doc.at("options");
        options.at("jobs").get_to(grid.options.jobs);
        options.at("mcnemar_threshold").get_to(grid.options.mcnemar_threshold);
        for (const auto& entry : doc.at("experiments")) {
            grid.experiments.push_back(experiment_from_json(entry, data));
        }
        if (grid.experiments.empty()) throw ConfigError("manifest lists no experiments");
        return grid;
    } catch (const ordered_json::exception& err) {
        throw ConfigError(path + ": " + err.what());
    }
}

bool is_manifest_path(const std::string& path) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return true;
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char c;
    while (in.get(c)) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{';
    }
    return false;
}

GridConfig load_grid_config(const std::string& path) {
    if (is_manifest_path(path)) return read_manifest(path);
    return grid_from_ini(IniFile::load(path));
}

ExperimentConfig load_run_config(const std::string& path) {
    if (!is_manifest_path(path)) return experiment_from_ini(IniFile::load(path));
    const GridConfig grid = read_manifest(path);
    if (grid.experiments.size() != 1) {
        throw ConfigError(path + ": the run command needs a single-experiment manifest; this one has " +
                          std::to_string(grid.experiments.size()));
    }
    return grid.experiments.front();
}

}  // namespace mtlw
