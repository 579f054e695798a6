#include "caccdet/comms.hpp"

namespace cacc {

V2VPayload transmit_v2v(const VehicleState& truth,
                        const std::vector<AttackSpec>& attacks, int vehicle,
                        double t, ReplayBuffer& buffer) {
    V2VPayload out;
    out.pred_velocity = truth.velocity;
    out.pred_acceleration = truth.acceleration;
    out.pred_control = truth.control_input;
    out.link_active = true;
    out.timestamp = t;
    buffer.push(out);

    for (const auto& a : attacks) {
        if (a.channel != AttackChannel::V2V || a.target_vehicle != vehicle ||
            !a.active_at(t))
            continue;
        switch (a.kind) {
        case AttackKind::DoS:
            out.link_active = false;
            break;
        case AttackKind::FDI:
            out.pred_velocity += a.bias_velocity;
            out.pred_acceleration += a.bias_acceleration;
            out.pred_control += a.bias_control;
            break;
        case AttackKind::Replay: {
            if (t - a.replay_delay < -1e-9) {
                out.link_active = false; // no history yet, behaves like DoS
                break;
            }
            auto old = buffer.at_time(t - a.replay_delay);
            if (!old) {
                out.link_active = false;
            } else {
                double ts = out.timestamp;
                out = *old;
                out.link_active = true;
                out.timestamp = ts;
            }
            break;
        }
        }
    }
    return out;
}

ModeCommand transmit_v2i(const ModeCommand& command,
                         const std::vector<AttackSpec>& attacks, int vehicle,
                         double t, const ModeCommand& last_received) {
    ModeCommand out = command;
    for (const auto& a : attacks) {
        if (a.channel != AttackChannel::V2I || a.target_vehicle != vehicle ||
            !a.active_at(t))
            continue;
        if (a.kind == AttackKind::FDI) {
            out.commanded_mode = a.mode_override;
        } else {
            out = last_received; // stale command, "fails to receive the update"
        }
    }
    return out;
}

} // namespace cacc
