#include "caccdet/supervisor.hpp"

namespace cacc {

void validate_schedule(const ModeSchedule& schedule) {
    if (schedule.entries.empty()) {
        if (!schedule.auto_rule)
            throw ConfigError("schedule is empty and no auto mode rule is set");
        return;
    }
    if (schedule.entries.front().first != 0.0)
        throw ConfigError("first schedule entry must be at t = 0");
    for (std::size_t i = 1; i < schedule.entries.size(); ++i)
        if (schedule.entries[i].first <= schedule.entries[i - 1].first)
            throw ConfigError("schedule switch times must be strictly increasing");
}

int commanded_mode(const ModeSchedule& schedule, double t,
                   double leader_velocity, int prev_mode) {
    if (!schedule.entries.empty()) {
        int mode = schedule.entries.front().second;
        for (const auto& [ts, id] : schedule.entries)
            if (t >= ts - 1e-12) mode = id;
        return mode;
    }
    if (!schedule.auto_rule)
        throw ConfigError("schedule is empty and no auto mode rule is set");
    const auto& r = *schedule.auto_rule;
    if (leader_velocity > r.threshold + r.band) return r.high_mode;
    if (leader_velocity < r.threshold - r.band) return r.low_mode;
    return prev_mode != 0 ? prev_mode : r.low_mode;
}

} // namespace cacc
