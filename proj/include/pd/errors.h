#pragma once

#include <stdexcept>
#include <string>

namespace pd {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// config/usage problems exit 2, runtime failures (divergence) exit 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (mesh, archive): message names the offending line/offset.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Structurally invalid data (out-of-range index, degenerate element).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Bad argument value (non-positive density, mismatched dimensions, ...).
class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Operation applied in the wrong state (double-centering snapshots, ...).
class StateError : public Error {
public:
    explicit StateError(const std::string& msg) : Error(msg) {}
};

// Invalid solver/benchmark configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Numerical failure in a linear solve or factorization.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

// Basis degenerated (all components thresholded away, singular reduced system).
class DegenerateBasisError : public Error {
public:
    explicit DegenerateBasisError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf detected during time stepping; carries frame and iteration indices.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, int frame, int iteration)
        : Error(msg), frame(frame), iteration(iteration) {}
    int frame;
    int iteration;
};

}  // namespace pd
