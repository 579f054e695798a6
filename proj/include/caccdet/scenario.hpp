#pragma once

#include "caccdet/comms.hpp"
#include "caccdet/core_model.hpp"
#include "caccdet/detection.hpp"
#include "caccdet/supervisor.hpp"
#include "caccdet/trace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cacc {

struct RingRoad {
    double length = 600.0;        // [m]
    int num_links = 20;           // reporting only
    double vehicle_length = 5.0;  // [m]
};

/// Leader behavior: track the trace velocity within the acceleration limit,
/// but never faster than the safe-approach envelope toward the circular
/// predecessor (time gap plus braking-distance bound).
struct LeaderConfig {
    double accel_limit = 3.0;     // [m/s^2]
    bool safety_enabled = true;
    double safety_time_gap = 0.8; // [s]
    double safety_decel = 2.5;    // [m/s^2]
};

/// Cooperative-following loss: a follower whose gap exceeds the range while
/// moving faster than min_speed for dwell seconds splits the platoon; the
/// split head performs a fallback stop, every vehicle behind it records a
/// disengagement event.
struct DisengageConfig {
    double range = 30.0;          // [m]
    double min_speed = 5.0;       // [m/s]
    double dwell = 1.0;           // [s]
    double fallback_decel = 2.0;  // [m/s^2]
};

enum class ExecutionPolicy { Serial, Parallel };

/// Full experiment description.
struct ScenarioConfig {
    std::string name = "scenario";
    RingRoad road;
    int n_followers = 11;
    double duration = 120.0;         // [s]
    double dt = 0.05;                // [s]
    std::uint64_t seed = 1;
    double noise_sigma = 0.05;       // process noise on the accel row [m/s^2]
    bool v2v_enabled = true;
    TraceSeries trace;
    std::vector<ModeParams> modes;
    std::vector<ObserverGains> gains;
    ModeSchedule schedule;
    std::vector<AttackSpec> attacks;
    ThresholdConfig thresholds;
    Vec4 observer_init_offset = Vec4::Zero();
    // isolator handover gate: a flagged vehicle's isolator activates once
    // the detector innovation is inside these bounds, so the copied seed
    // reflects the plant rather than a stale transient
    double handover_headway_bound = 2.5;  // [m]
    double handover_velocity_bound = 1.0; // [m/s]
    bool isolators_always_on = false;
    LeaderConfig leader;
    DisengageConfig disengage;
    ExecutionPolicy execution = ExecutionPolicy::Serial;
    bool record_estimates = false;   // per-step observer diagnostics

    const ModeParams& mode(int id) const;
    const ObserverGains& gains_for(int id) const;
};

struct ValidationIssue {
    std::string check;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::vector<std::string> passed;
    bool ok() const { return issues.empty(); }
};

/// Runs every load-time gate: parameter sanity, closed-loop and observer
/// eigenchecks, schedule structure, attack specs, trace coverage, ring
/// capacity, threshold positivity.
ValidationReport validate_scenario(const ScenarioConfig& config);

/// Parses a scenario from a JSON file. Relative trace paths resolve against
/// the config file's directory. Throws ConfigError on malformed input.
ScenarioConfig load_scenario(const std::string& path);

/// Same, from an in-memory JSON string (trace paths resolve against base_dir).
ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& base_dir);

} // namespace cacc
