#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aggr/analysis.hpp"
#include "aggr/sim.hpp"

namespace aggr {

// Config-file problem carrying the offending line number.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat key=value format; '#' comments and blank lines ignored. See README
// for the key reference. Throws ConfigError naming the offending line.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

// Deterministic serializations, all numbers at 9 significant digits, LF
// endings. Trajectory rows are slot-major, worker-minor, workers 1-based.
std::string trajectory_csv(const Trajectory& trajectory);
std::string summary_json(const ScenarioConfig& config, const Trajectory& trajectory);
std::string verdicts_csv(const std::vector<VerdictReport>& reports);

// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::string& path, const std::string& content);

struct SweepSpec {
    std::string axis;                 // T, N, epsilon, or mechanism
    std::vector<std::string> values;  // axis values as written on the command line
};

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override);
int cmd_verify(const std::string& suite, const std::string& out_dir, int seeds);
int cmd_sweep(const std::string& config_path, const SweepSpec& sweep, const std::string& out_dir,
              int seeds, int jobs, std::optional<std::uint64_t> seed_override);

// Full argument parsing + dispatch; returns the process exit code
// (0 success/all-pass, 1 check or I/O failure, 2 usage/config error).
int run_cli(int argc, const char* const* argv);

}  // namespace aggr
