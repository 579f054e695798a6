#pragma once

#include "caccdet/core_model.hpp"

#include <deque>
#include <limits>
#include <vector>

namespace cacc {

/// Supervisor mode command as delivered over V2I.
struct ModeCommand {
    int commanded_mode = 1;
    double issue_time = 0.0;
};

enum class AttackChannel { V2V, V2I };
enum class AttackKind { FDI, DoS, Replay };

/// Declarative description of one attack. Blackhole is accepted at parse
/// time and mapped onto DoS (message absence).
struct AttackSpec {
    AttackChannel channel = AttackChannel::V2V;
    AttackKind kind = AttackKind::FDI;
    int target_vehicle = 1;                 // follower index 1..n
    double start = 0.0;                     // [s]
    double end = std::numeric_limits<double>::infinity();
    // payload law
    double bias_velocity = 0.0;             // V2V FDI additive bias [m/s]
    double bias_acceleration = 0.0;         // [m/s^2]
    double bias_control = 0.0;              // [m/s^2]
    int mode_override = 0;                  // V2I FDI replacement mode id
    double replay_delay = 0.0;              // tau [s]

    bool active_at(double t) const { return t >= start && t < end; }
};

/// Per-link history of truthful payloads, kept long enough to serve the
/// largest configured replay delay.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

    void set_capacity(std::size_t capacity) { capacity_ = capacity; }

    void push(const V2VPayload& truth) {
        buf_.push_back(truth);
        if (capacity_ > 0 && buf_.size() > capacity_) buf_.pop_front();
    }

    /// Payload recorded at timestamp closest to t (ordered buffer).
    std::optional<V2VPayload> at_time(double t) const {
        for (auto it = buf_.rbegin(); it != buf_.rend(); ++it)
            if (it->timestamp <= t + 1e-9) return *it;
        return std::nullopt;
    }

    std::size_t size() const { return buf_.size(); }

private:
    std::size_t capacity_;
    std::deque<V2VPayload> buf_;
};

/// V2V channel for one link: applies any active attack to the truthful
/// predecessor broadcast. The truth state is never mutated. Replay before
/// t >= tau falls back to DoS semantics.
V2VPayload transmit_v2v(const VehicleState& truth,
                        const std::vector<AttackSpec>& attacks, int vehicle,
                        double t, ReplayBuffer& buffer);

/// V2I channel for one vehicle: FDI overrides the commanded mode, DoS
/// freezes the last successfully received command.
ModeCommand transmit_v2i(const ModeCommand& command,
                         const std::vector<AttackSpec>& attacks, int vehicle,
                         double t, const ModeCommand& last_received);

} // namespace cacc
