#pragma once

#include "caccdet/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cacc {

/// One logged step: per-vehicle kinematics, executed mode, residuals and
/// flags, plus the platoon V2I flag.
struct LogRow {
    double t = 0.0;
    std::vector<double> pos, v, a, u, h; // size n+1, leader first
    std::vector<int> mode;
    std::vector<double> rc, gamma;
    std::vector<int> v2x_flag;
    int v2i_flag = 0;
};

/// Metadata needed to recompute the summary from a log file alone; written
/// as comment lines in the CSV header.
struct LogMeta {
    std::string scenario;
    std::uint64_t seed = 0;
    double dt = 0.05;
    int n_vehicles = 12;
    DisengageConfig disengage;
    std::vector<AttackSpec> attacks;
};

struct SimLog {
    LogMeta meta;
    std::vector<LogRow> rows;
    bool aborted = false; // numeric divergence cut the run short
};

struct DetectionSummary {
    int vehicle = 0;
    double time = 0.0;
    std::optional<double> delay; // vs. earliest attack start on that vehicle
};

struct IsolationSummary {
    double time = 0.0;
    std::optional<double> delay; // vs. the firing vehicle's activation
};

struct SummaryReport {
    std::optional<DetectionSummary> detection;
    std::optional<IsolationSummary> isolation;
    int false_alarms = 0;
    double min_headway = 0.0; // over followers
    int collisions = 0;
    int disengagements = 0;
    bool aborted = false;
};

/// Counts contact episodes from logged follower headways: an episode starts
/// when h reaches exactly zero and re-arms once h exceeds the reopen margin.
int count_collisions(const SimLog& log, double rearm = 0.1);

/// Replays the range/dwell/min-speed disengagement rule over the logged
/// rows; returns one event per vehicle of each platoon split (split head
/// and everything behind it).
std::vector<std::pair<double, int>> disengagement_events(const SimLog& log);

/// Builds the summary from the log alone (same function the engine uses, so
/// `report` output is identical to the run-time summary).
SummaryReport summarize(const SimLog& log);

/// CSV export: `# key=value` metadata comments, one header line, then one
/// row per step. Doubles use shortest round-trip formatting.
void write_log_csv(const SimLog& log, const std::string& path);

/// Parses a log written by write_log_csv. Throws std::runtime_error naming
/// the first bad row.
SimLog read_log_csv(const std::string& path);

/// summary.json serialization (stable key order).
std::string summary_to_json(const SummaryReport& s);

/// Per-series plot files: velocity.csv, position.csv, rc.csv, gamma.csv.
void write_plotdata(const SimLog& log, const std::string& dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

struct CalibrationModeStats {
    int mode_id = 0;
    double max_rc = 0.0;    // [m^2]
    double max_gamma = 0.0; // [m]
};

struct CalibrationResult {
    ThresholdConfig thresholds;
    std::vector<CalibrationModeStats> stats;
};

/// Derives per-mode thresholds from an attack-free run: margin times the
/// largest observed nominal residual, never below the configured floors.
/// The leader's logged mode column supplies the trusted mode per row.
/// Rejects logs that contain any raised flag.
CalibrationResult calibrate_thresholds(const SimLog& nominal_log, double margin,
                                       double floor_jds = 0.05,
                                       double floor_jis = 0.1);

} // namespace cacc
