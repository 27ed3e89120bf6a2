#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace mvjump {

struct ScenarioOutcome {
    bool pass = true;
    std::string kind;
    std::uint64_t seed = 0;
    std::string message;
};

/// Runs one scenario config (JSON, see README for the schema) and writes its
/// CSV/JSON artifacts into out_dir. Throws on configuration or numerical
/// errors; a clean run with failing acceptance checks returns pass = false.
ScenarioOutcome run_scenario(const std::string& config_path, const std::string& out_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt,
                             bool quiet = false);

struct CompareOutcome {
    /// 0: all deltas within tolerance, 1: shape mismatch or missing file,
    /// 2: delta above tolerance.
    int status = 0;
    std::string message;
};

/// Column-wise numeric diff of the like-named CSV files in two directories.
CompareOutcome compare_dirs(const std::string& dir_a, const std::string& dir_b, double tolerance,
                            bool quiet = false);

}  // namespace mvjump
