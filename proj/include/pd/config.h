#pragma once

#include <cstdint>
#include <string>

#include "pd/constraints.h"
#include "pd/solver.h"

namespace pd {

/// Declarative run configuration shared by the CLI subcommands.
struct AppConfig {
    SolverConfig solver;
    ConstraintConfig constraints;
    int frames = 100;
    int stride = 1;
};

/// Parses a JSON config file. Unknown keys are rejected so typos fail loudly.
AppConfig load_config(const std::string& path);

/// Stable hash of the parsed config (key order independent).
uint64_t config_hash(const std::string& path);

}  // namespace pd
