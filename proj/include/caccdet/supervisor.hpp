#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cacc {

/// Speed-threshold fallback rule used when no scripted entry applies.
struct AutoModeRule {
    double threshold = 18.0; // [m/s]
    double band = 2.0;       // hysteresis half-width [m/s]
    int high_mode = 1;       // above threshold+band
    int low_mode = 2;        // below threshold-band
};

/// Piecewise-constant mode program. Scripted entries take precedence over
/// the optional auto rule; the signal is right-continuous.
struct ModeSchedule {
    std::vector<std::pair<double, int>> entries; // (switch time, mode id)
    std::optional<AutoModeRule> auto_rule;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mode commanded at time t. With an auto rule, prev_mode supplies the
/// hysteresis state inside the band.
int commanded_mode(const ModeSchedule& schedule, double t,
                   double leader_velocity, int prev_mode = 0);

/// Structural checks: strictly increasing switch times, first entry at 0.
void validate_schedule(const ModeSchedule& schedule);

} // namespace cacc
