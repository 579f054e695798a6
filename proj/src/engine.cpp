#include "caccdet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cacc {

double ring_gap(double pos_pred, double pos, const RingRoad& road) {
    double d = std::fmod(pos_pred - pos, road.length);
    if (d < 0.0) d += road.length;
    return d - road.vehicle_length;
}

VehicleState leader_step(const TraceSeries& trace, double t,
                         const VehicleState& state, double dt,
                         const LeaderConfig& leader, double gap_ahead,
                         double standstill, double ring_length) {
    double target = trace.value_at(t + dt);
    if (leader.safety_enabled) {
        const double margin = std::max(0.0, gap_ahead - standstill);
        const double v_gap = margin / leader.safety_time_gap;
        const double v_brake = std::sqrt(2.0 * leader.safety_decel * margin);
        target = std::min(target, std::min(v_gap, v_brake));
    }
    double a = (target - state.velocity) / dt;
    a = std::clamp(a, -leader.accel_limit, leader.accel_limit);
    VehicleState next = state;
    next.velocity = std::max(0.0, state.velocity + a * dt);
    next.acceleration = a;
    next.control_input = a;
    next.position = std::fmod(state.position + dt * state.velocity, ring_length);
    if (next.position < 0.0) next.position += ring_length;
    return next;
}

namespace {

struct EngineState {
    std::vector<VehicleState> veh;       // 0 = leader
    std::vector<int> exec_mode;
    std::vector<int> last_cmd;
    std::vector<DetectorState> det;
    std::vector<IsolatorState> iso;
    std::vector<ReplayBuffer> buffers;
    std::vector<bool> touching;          // contact episode per vehicle
    std::vector<bool> disengaged;
    std::vector<bool> fallback_head;     // split heads performing the stop
    std::vector<double> diseng_timer;
    std::vector<bool> iso_pending;       // flagged, waiting for handover
};

struct StepScratch {
    std::vector<V2VPayload> payload;     // per follower
    std::vector<Measurement> meas;
    std::vector<std::size_t> mode_idx;   // executed-mode index per vehicle
    std::vector<double> noise;
    std::vector<VehicleState> veh_next;
    std::vector<DetectorState> det_next;
    std::vector<IsolatorState> iso_next;
};

bool v2i_dos_active(const std::vector<AttackSpec>& attacks, int vehicle, double t) {
    for (const auto& a : attacks)
        if (a.channel == AttackChannel::V2I && a.kind == AttackKind::DoS &&
            a.target_vehicle == vehicle && a.active_at(t))
            return true;
    return false;
}

/// Detector + isolator update for one vehicle (Jacobi: all predecessor
/// estimates come from the step-start snapshot).
void advance_observers(int i, const EngineState& snap, StepScratch& s,
                       const SystemMatrices& sys, const ObserverGains& gains,
                       const ModeParams& params, double dt) {
    const Vec4 leader_truth = snap.veh[0].chi();
    const Vec4 pred_det = (i == 1) ? leader_truth : snap.det[i - 1].chi_hat;
    s.det_next[i] = detector_step(snap.det[i], pred_det, s.meas[i], sys, gains,
                                  params, dt);
    if (snap.iso[i].active) {
        Vec4 pred_iso = leader_truth;
        if (i > 1)
            pred_iso = snap.iso[i - 1].active ? snap.iso[i - 1].psi_hat
                                              : snap.det[i - 1].chi_hat;
        s.iso_next[i] = isolator_step(snap.iso[i], pred_iso, s.meas[i],
                                      s.payload[i], sys, gains, params, dt);
    } else {
        s.iso_next[i] = snap.iso[i];
    }
}

/// Plant update for one follower from the step-start snapshot.
void advance_vehicle(int i, const EngineState& snap, StepScratch& s,
                     const ScenarioConfig& cfg, const SystemMatrices& sys,
                     const ModeParams& params) {
    const auto& cur = snap.veh[i];
    if (snap.disengaged[i] && snap.fallback_head[i]) {
        // cooperative following lost: controlled stop
        VehicleState next = cur;
        double a = cur.velocity > 1e-12
                       ? std::max(-cfg.disengage.fallback_decel, -cur.velocity / cfg.dt)
                       : 0.0;
        next.velocity = std::max(0.0, cur.velocity + a * cfg.dt);
        next.acceleration = a;
        next.control_input = 0.0;
        next.position = std::fmod(cur.position + cfg.dt * cur.velocity, cfg.road.length);
        if (next.position < 0.0) next.position += cfg.road.length;
        next.headway = cur.headway;
        s.veh_next[i] = next;
        return;
    }
    Vec4 noise = Vec4::Zero();
    noise[2] = s.noise[i];
    const Vec4 d = vehicle_derivative(cur, s.payload[i], snap.veh[i - 1].velocity,
                                      sys, params, noise);
    s.veh_next[i] = step_euler(cur, d, cfg.dt, cfg.road.length);
}

} // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
    const int n = cfg.n_followers;
    const int nv = n + 1;
    const double dt = cfg.dt;
    const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / dt));
    const std::size_t W = cfg.thresholds.window;
    const bool parallel = cfg.execution == ExecutionPolicy::Parallel;

    // per-mode matrices and gains, indexed by position in cfg.modes
    std::vector<SystemMatrices> sys_by_mode;
    for (const auto& m : cfg.modes)
        sys_by_mode.push_back(build_matrices(m, cfg.v2v_enabled));
    auto mode_index = [&](int id) -> std::size_t {
        for (std::size_t k = 0; k < cfg.modes.size(); ++k)
            if (cfg.modes[k].mode_id == id) return k;
        throw ConfigError("unknown mode id " + std::to_string(id));
    };

    RunResult result;
    SimLog& log = result.log;
    log.meta.scenario = cfg.name;
    log.meta.seed = cfg.seed;
    log.meta.dt = dt;
    log.meta.n_vehicles = nv;
    log.meta.disengage = cfg.disengage;
    log.meta.attacks = cfg.attacks;
    log.rows.reserve(steps + 1);

    // --- initialization at equilibrium spacing
    EngineState st;
    st.veh.resize(nv);
    st.exec_mode.assign(nv, 0);
    st.last_cmd.assign(nv, 0);
    st.det.resize(nv);
    st.iso.resize(nv);
    st.buffers.resize(nv);
    st.touching.assign(nv, false);
    st.disengaged.assign(nv, false);
    st.fallback_head.assign(nv, false);
    st.diseng_timer.assign(nv, 0.0);
    st.iso_pending.assign(nv, false);

    double max_tau = 0.0;
    for (const auto& a : cfg.attacks)
        if (a.kind == AttackKind::Replay) max_tau = std::max(max_tau, a.replay_delay);
    for (auto& b : st.buffers)
        b.set_capacity(static_cast<std::size_t>(max_tau / dt) + 2);

    const int mode0 = commanded_mode(cfg.schedule, 0.0, cfg.trace.value_at(0.0));
    const auto& m0 = cfg.mode(mode0);
    const double v0 = cfg.trace.value_at(0.0);
    const double heq = m0.time_headway * v0 + m0.standstill;

    st.veh[0].position = 0.0;
    st.veh[0].velocity = v0;
    for (int i = 1; i < nv; ++i) {
        double p = st.veh[i - 1].position - (heq + cfg.road.vehicle_length);
        p = std::fmod(p, cfg.road.length);
        if (p < 0.0) p += cfg.road.length;
        st.veh[i].position = p;
        st.veh[i].velocity = v0;
        st.veh[i].headway = heq;
    }
    st.veh[0].headway =
        std::max(0.0, ring_gap(st.veh[n].position, st.veh[0].position, cfg.road));
    for (int i = 0; i < nv; ++i) {
        st.exec_mode[i] = mode0;
        st.last_cmd[i] = mode0;
    }
    for (int i = 1; i < nv; ++i) {
        st.det[i].chi_hat = st.veh[i].chi() + cfg.observer_init_offset;
        if (cfg.isolators_always_on) {
            st.iso[i].active = true;
            st.iso[i].calibration_only = true;
            st.iso[i].psi_hat = st.det[i].chi_hat;
        }
    }

    DecisionState decisions(n);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    StepScratch scratch;
    scratch.payload.resize(nv);
    scratch.meas.resize(nv);
    scratch.mode_idx.assign(nv, 0);
    scratch.noise.assign(nv, 0.0);
    scratch.veh_next.resize(nv);
    scratch.det_next.resize(nv);
    scratch.iso_next.resize(nv);
    std::vector<ResidualSample> rs(nv);

    int prev_mode = mode0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;

        // (1) supervisor
        const int cm = commanded_mode(cfg.schedule, t, st.veh[0].velocity, prev_mode);
        prev_mode = cm;
        const std::size_t cmi = mode_index(cm);
        const ModeParams& cmp = cfg.modes[cmi];
        const SystemMatrices& csys = sys_by_mode[cmi];
        const ObserverGains& cg = cfg.gains_for(cm);

        // (2) V2I delivery -> executed modes
        for (int i = 1; i < nv; ++i) {
            ModeCommand cmd{cm, t};
            ModeCommand last{st.last_cmd[i], t};
            ModeCommand got = transmit_v2i(cmd, cfg.attacks, i, t, last);
            st.exec_mode[i] = got.commanded_mode;
            if (!v2i_dos_active(cfg.attacks, i, t)) st.last_cmd[i] = got.commanded_mode;
            scratch.mode_idx[i] = mode_index(st.exec_mode[i]); // throws serially
        }
        st.exec_mode[0] = cm;

        // (3) V2V payloads from the step-start snapshot
        for (int i = 1; i < nv; ++i)
            scratch.payload[i] =
                transmit_v2v(st.veh[i - 1], cfg.attacks, i, t, st.buffers[i]);

        // (4) measurements (20 Hz grid == step grid)
        for (int i = 0; i < nv; ++i)
            scratch.meas[i] = {st.veh[i].headway, st.veh[i].velocity, t};

        // (5) residual pass: aligned error windows first, then r_c and gamma
        for (int i = 1; i < nv; ++i) {
            const double e = scratch.meas[i].headway - st.det[i].chi_hat[0];
            st.det[i].push_error(e, W);
        }
        for (int i = 1; i < nv; ++i) {
            const double pred_sum = (i == 1) ? 0.0 : st.det[i - 1].window_sum;
            st.det[i].residual = std::max(0.0, st.det[i].window_sum - pred_sum);
            st.iso[i].residual =
                st.iso[i].active
                    ? is_residual(scratch.meas[i], st.iso[i].psi_hat[0])
                    : 0.0;
        }

        // (6) decision logic; activations copy the detector estimate
        {
            for (int i = 1; i < nv; ++i) {
                rs[i].r_c = st.det[i].residual;
                rs[i].gamma = st.iso[i].residual;
                rs[i].isolator_active = st.iso[i].active;
                rs[i].isolator_calibration = st.iso[i].calibration_only;
            }
            for (int i : decide(rs, cfg.thresholds, cm, decisions, t))
                st.iso_pending[i] = true;
            // handover gate: seed the isolator only when the detector
            // estimate agrees with both measured channels, so a stale
            // transient cannot masquerade as V2I corruption later
            for (int i = 1; i < nv; ++i) {
                if (!st.iso_pending[i]) continue;
                if (st.fallback_head[i]) { // CACC disengaged, moot
                    st.iso_pending[i] = false;
                    continue;
                }
                auto& iso = st.iso[i];
                if (iso.active && !iso.calibration_only) {
                    st.iso_pending[i] = false;
                    continue;
                }
                const double eh = scratch.meas[i].headway - st.det[i].chi_hat[0];
                const double ev = scratch.meas[i].velocity - st.det[i].chi_hat[1];
                if (std::abs(eh) > cfg.handover_headway_bound ||
                    std::abs(ev) > cfg.handover_velocity_bound)
                    continue;
                iso.active = true;
                iso.calibration_only = false;
                iso.activation_time = t;
                iso.psi_hat = st.det[i].chi_hat;
                iso.residual = 0.0;
                result.diag.activations.push_back(
                    {t, i, iso.psi_hat, st.det[i].chi_hat});
                st.iso_pending[i] = false;
            }
        }

        // (7) disengagement rule on the logged state (split semantics)
        for (int i = 1; i < nv; ++i) {
            if (st.disengaged[i]) continue;
            if (st.veh[i].headway > cfg.disengage.range &&
                st.veh[i].velocity > cfg.disengage.min_speed) {
                st.diseng_timer[i] += dt;
                if (st.diseng_timer[i] >= cfg.disengage.dwell - 1e-9) {
                    st.fallback_head[i] = true;
                    // the isolator tests CACC behavior; a vehicle in
                    // fallback stop no longer runs it, so retire the bank
                    st.iso[i].active = false;
                    st.iso[i].residual = 0.0;
                    for (int j = i; j < nv; ++j) {
                        if (!st.disengaged[j]) {
                            st.disengaged[j] = true;
                            result.diag.disengagements.emplace_back(t, j);
                        }
                    }
                }
            } else {
                st.diseng_timer[i] = 0.0;
            }
        }

        // (8) log row at t
        {
            LogRow row;
            row.t = t;
            row.pos.resize(nv); row.v.resize(nv); row.a.resize(nv);
            row.u.resize(nv); row.h.resize(nv);
            row.mode.resize(nv); row.rc.resize(nv); row.gamma.resize(nv);
            row.v2x_flag.resize(nv);
            for (int i = 0; i < nv; ++i) {
                row.pos[i] = st.veh[i].position;
                row.v[i] = st.veh[i].velocity;
                row.a[i] = st.veh[i].acceleration;
                row.u[i] = st.veh[i].control_input;
                row.h[i] = st.veh[i].headway;
                row.mode[i] = st.exec_mode[i];
                row.rc[i] = (i == 0) ? 0.0 : st.det[i].residual;
                row.gamma[i] = (i == 0) ? 0.0 : st.iso[i].residual;
                row.v2x_flag[i] = (i == 0) ? 0 : (decisions.v2x_flag[i] ? 1 : 0);
            }
            row.v2i_flag = decisions.v2i_flag ? 1 : 0;
            log.rows.push_back(std::move(row));
        }
        if (cfg.record_estimates) {
            std::vector<double> eh(nv, 0.0);
            std::vector<Vec4> ch(nv, Vec4::Zero());
            for (int i = 1; i < nv; ++i) {
                eh[i] = scratch.meas[i].headway - st.det[i].chi_hat[0];
                ch[i] = st.det[i].chi_hat;
            }
            result.diag.headway_error.push_back(std::move(eh));
            result.diag.chi_hat.push_back(std::move(ch));
        }

        if (k == steps) break;

        // divergence gate
        bool diverged = false;
        for (int i = 0; i < nv; ++i) {
            const Vec4 x = st.veh[i].chi();
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6) diverged = true;
        }
        if (diverged) {
            result.diverged = true;
            log.aborted = true;
            break;
        }

        // (9)+(10) observer and plant banks: both consume the step-start
        // snapshot and write disjoint slots, so they share one parallel
        // region (Jacobi update). Noise is drawn serially for determinism.
        for (int i = 0; i < nv; ++i) scratch.noise[i] = gauss(rng) * cfg.noise_sigma;
        {
            const double gap_ahead =
                ring_gap(st.veh[n].position, st.veh[0].position, cfg.road);
            scratch.veh_next[0] = leader_step(cfg.trace, t, st.veh[0], dt, cfg.leader,
                                              gap_ahead, cmp.standstill,
                                              cfg.road.length);
        }
        if (parallel) {
#pragma omp parallel
            {
#pragma omp for schedule(static) nowait
                for (int i = 1; i < nv; ++i)
                    advance_observers(i, st, scratch, csys, cg, cmp, dt);
#pragma omp for schedule(static)
                for (int i = 1; i < nv; ++i) {
                    const std::size_t mi = scratch.mode_idx[i];
                    advance_vehicle(i, st, scratch, cfg, sys_by_mode[mi],
                                    cfg.modes[mi]);
                }
            }
        } else {
            // serial reference path, kept bit-identical to the parallel one
            for (int i = 1; i < nv; ++i)
                advance_observers(i, st, scratch, csys, cg, cmp, dt);
            for (int i = 1; i < nv; ++i) {
                const std::size_t mi = scratch.mode_idx[i];
                advance_vehicle(i, st, scratch, cfg, sys_by_mode[mi], cfg.modes[mi]);
            }
        }
        for (int i = 1; i < nv; ++i) st.det[i] = scratch.det_next[i];
        for (int i = 1; i < nv; ++i) st.iso[i] = scratch.iso_next[i];
        for (int i = 0; i < nv; ++i) st.veh[i] = scratch.veh_next[i];

        // (11) contact handling and geometric headway refresh (serial chain)
        auto contact_pass = [&](int i) {
            const int p = (i == 0) ? n : i - 1;
            const double g = ring_gap(st.veh[p].position, st.veh[i].position, cfg.road);
            if (g < 0.0) {
                double np = st.veh[p].position - cfg.road.vehicle_length;
                np = std::fmod(np, cfg.road.length);
                if (np < 0.0) np += cfg.road.length;
                st.veh[i].position = np;
                st.veh[i].velocity = std::min(st.veh[i].velocity, st.veh[p].velocity);
                st.veh[i].headway = 0.0;
                if (!st.touching[i]) {
                    st.touching[i] = true;
                    result.diag.collisions.emplace_back(t + dt, i);
                }
            } else {
                if (g > 0.1) st.touching[i] = false;
                st.veh[i].headway = std::max(0.0, g);
            }
        };
        for (int i = 1; i < nv; ++i) contact_pass(i);
        contact_pass(0);
    }

    result.summary = summarize(log);
    return result;
}

} // namespace cacc
