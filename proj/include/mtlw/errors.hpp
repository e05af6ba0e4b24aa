#pragma once

#include <stdexcept>
#include <string>

namespace mtlw {

// Error taxonomy shared by all modules. Everything derives from
// std::runtime_error so callers can catch broadly or by kind.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error("dimension error: " + msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error("numerical error: " + msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error("validation error: " + msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error("parse error: " + msg) {}
};

// Metric is undefined on the given inputs (e.g. one class absent); this is
// deliberately distinct from returning 0 or NaN silently.
struct UndefinedMetricError : std::runtime_error {
    explicit UndefinedMetricError(const std::string& msg)
        : std::runtime_error("undefined metric: " + msg) {}
};

struct GenerationError : std::runtime_error {
    explicit GenerationError(const std::string& msg) : std::runtime_error("generation error: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

}  // namespace mtlw
