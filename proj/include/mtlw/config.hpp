#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtlw/harness.hpp"

namespace mtlw {

// ---------------------------------------------------------------------------
// Configuration front-end. Two interchangeable formats:
//
//  * INI-style text with sections [experiment] [data] [model] [training]
//    [weights] [pflp] [itw] [grid]; '#' and ';' start full-line comments.
//    Unknown sections and keys are rejected with their line number.
//
//  * A JSON run manifest ("mtlw-manifest-v1") holding the fully resolved
//    grid: the shared data reference, grid options and every experiment.
//    Replaying a manifest reproduces the run byte for byte.
//
// Files are sniffed: a .json extension or a leading '{' means manifest.
// ---------------------------------------------------------------------------

class IniFile {
public:
    static IniFile parse_text(const std::string& text, const std::string& origin = "<config>");
    static IniFile load(const std::string& path);

    const std::string& origin() const { return origin_; }
    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    // take_* consume the key: each returns nullopt when absent and throws
    // ConfigError (with file and line) on a malformed value. finish()
    // then rejects everything that was never consumed.
    std::optional<std::string> take(const std::string& section, const std::string& key);
    std::optional<double> take_double(const std::string& section, const std::string& key);
    std::optional<std::uint64_t> take_u64(const std::string& section, const std::string& key);
    std::optional<std::size_t> take_size(const std::string& section, const std::string& key);
    std::optional<bool> take_bool(const std::string& section, const std::string& key);
    std::optional<std::vector<double>> take_doubles(const std::string& section,
                                                    const std::string& key);
    std::optional<std::vector<std::size_t>> take_sizes(const std::string& section,
                                                       const std::string& key);

    void allow_section(const std::string& section);
    void finish() const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
        bool used = false;
    };
    struct Section {
        std::size_t line = 0;
        bool allowed = false;
        std::map<std::string, Entry> entries;
    };

    [[noreturn]] void fail(std::size_t line, const std::string& message) const;
    const Entry* peek(const std::string& section, const std::string& key) const;
    Entry* consume(const std::string& section, const std::string& key);

    std::string origin_;
    std::map<std::string, Section> sections_;
};

/// [data] only; for the synth command. source must be synth (the default).
SynthConfig synth_from_ini(IniFile ini);

/// Full single-run configuration. Precedence: built-in defaults, then the
/// preset named by [experiment] preset (if any), then explicit keys.
ExperimentConfig experiment_from_ini(IniFile ini);

/// Grid configuration: [grid] presets (default: every built-in preset)
/// expanded over the shared [data]/[model]/[training] sections. Explicit
/// [weights]/[pflp]/[itw] sections are rejected here; per-experiment
/// policy settings come from the presets.
GridConfig grid_from_ini(IniFile ini);

void write_manifest(const GridConfig& grid, const std::string& path);
GridConfig read_manifest(const std::string& path);

/// True when the path names a JSON manifest rather than an INI config,
/// by extension or by its first non-whitespace byte.
bool is_manifest_path(const std::string& path);

/// Sniffing loaders used by the CLI.
GridConfig load_grid_config(const std::string& path);
ExperimentConfig load_run_config(const std::string& path);

}  // namespace mtlw
