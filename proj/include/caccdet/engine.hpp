#pragma once

#include "caccdet/scenario.hpp"
#include "caccdet/sim_log.hpp"

#include <vector>

namespace cacc {

/// Bumper-to-bumper gap from a predecessor position to a follower position
/// on the ring. Negative values mean overlap (collision).
double ring_gap(double pos_pred, double pos, const RingRoad& road);

/// Advances the trace-following leader one step: tracks the trace velocity
/// under the acceleration limit, capped by the safe-approach envelope
/// toward its circular predecessor when safety is enabled.
VehicleState leader_step(const TraceSeries& trace, double t,
                         const VehicleState& state, double dt,
                         const LeaderConfig& leader, double gap_ahead,
                         double standstill, double ring_length);

/// Observer bookkeeping recorded at each isolator activation
/// (psi_hat must equal chi_hat componentwise at that row).
struct ActivationRecord {
    double t = 0.0;
    int vehicle = 0;
    Vec4 psi_hat = Vec4::Zero();
    Vec4 chi_hat = Vec4::Zero();
};

struct Diagnostics {
    std::vector<ActivationRecord> activations;
    std::vector<std::pair<double, int>> collisions;     // (t, vehicle)
    std::vector<std::pair<double, int>> disengagements; // (t, vehicle)
    // present when config.record_estimates is set: [step][vehicle]
    std::vector<std::vector<double>> headway_error;
    std::vector<std::vector<Vec4>> chi_hat;
};

struct RunResult {
    SimLog log;
    SummaryReport summary;
    Diagnostics diag;
    bool diverged = false;
};

/// Runs the full closed loop on the fixed dt grid: supervisor, V2I/V2V
/// channels, plant, measurement sampling, detector/isolator banks, decision
/// logic, logging. Deterministic for a given config and seed; serial and
/// parallel execution produce identical logs.
RunResult run_scenario(const ScenarioConfig& config);

} // namespace cacc
