#pragma once

#include "caccdet/engine.hpp"

#include <optional>
#include <string>

namespace cacc {

/// Exit codes shared by all subcommands: 0 success, 1 config/input error,
/// 2 runtime divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitDiverged = 2;

struct RunRequest {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<double> noise_sigma;
    std::string format = "json"; // or "text"
};

/// Parses and gate-checks a config; prints one line per check.
int cmd_validate(const std::string& config_path, std::ostream& out);

/// Runs a scenario and writes log.csv, summary.json and plotdata/ under the
/// requested output directory, then prints a one-line verdict.
int cmd_run(const RunRequest& request, std::ostream& out);

/// Recomputes summary.json from a log file alone; byte-identical to the
/// summary written by cmd_run for the same log.
int cmd_report(const std::string& log_path,
               const std::optional<std::string>& out_path, std::ostream& out);

} // namespace cacc
