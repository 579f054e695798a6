#include "caccdet/detection.hpp"

#include "caccdet/supervisor.hpp"

#include <algorithm>
#include <cmath>

namespace cacc {

double ThresholdConfig::jds_for(int mode) const {
    for (const auto& [id, v] : j_ds)
        if (id == mode) return v;
    throw ConfigError("no J_DS threshold for mode " + std::to_string(mode));
}

double ThresholdConfig::jis_for(int mode) const {
    for (const auto& [id, v] : j_is)
        if (id == mode) return v;
    throw ConfigError("no J_IS threshold for mode " + std::to_string(mode));
}

namespace {

Vec4 observer_rhs(const Vec4& x_hat, double pred_velocity, double ff_row4,
                  const Vec2& innovation, const SystemMatrices& m,
                  const Mat42& gain, double standstill) {
    Vec4 d = m.A * x_hat;
    d[0] = pred_velocity - x_hat[1];
    d[3] += ff_row4 - m.S[3] * standstill;
    d += gain * innovation;
    return d;
}

Vec4 euler_clamped(const Vec4& x, const Vec4& d, double dt) {
    Vec4 n = x + dt * d;
    // mirror the plant's physical floors
    if (n[0] < 0.0) n[0] = 0.0;
    if (n[1] < 0.0) n[1] = 0.0;
    return n;
}

} // namespace

DetectorState detector_step(const DetectorState& state, const Vec4& pred_estimate,
                            const Measurement& y, const SystemMatrices& m,
                            const ObserverGains& gains, const ModeParams& params,
                            double dt) {
    DetectorState next = state;
    const Vec2 innovation = y.y() - m.C * state.chi_hat;
    const double ff = m.D(3, 1) * pred_estimate[1] +
                      m.D(3, 2) * pred_estimate[2] +
                      m.D(3, 3) * pred_estimate[3];
    const Vec4 d = observer_rhs(state.chi_hat, pred_estimate[1], ff, innovation,
                                m, gains.L, params.standstill);
    next.chi_hat = euler_clamped(state.chi_hat, d, dt);
    return next;
}

IsolatorState isolator_step(const IsolatorState& state, const Vec4& pred_estimate,
                            const Measurement& y, const V2VPayload& received,
                            const SystemMatrices& m, const ObserverGains& gains,
                            const ModeParams& params, double dt) {
    if (!state.active)
        throw std::logic_error("isolator_step called on inactive isolator");
    IsolatorState next = state;
    const Vec2 innovation = y.y() - m.C * state.psi_hat;
    double ff = 0.0;
    if (received.link_active) {
        ff = m.D(3, 1) * received.pred_velocity +
             m.D(3, 2) * received.pred_acceleration +
             m.D(3, 3) * received.pred_control;
    }
    const Vec4 d = observer_rhs(state.psi_hat, pred_estimate[1], ff, innovation,
                                m, gains.M, params.standstill);
    next.psi_hat = euler_clamped(state.psi_hat, d, dt);
    return next;
}

double ds_residual(const std::vector<double>& own_window,
                   const std::vector<double>& pred_window) {
    double own = 0.0, pred = 0.0;
    for (double w : own_window) own += w;
    for (double w : pred_window) pred += w;
    return std::max(0.0, own - pred);
}

double is_residual(const Measurement& y, double headway_estimate) {
    return y.headway - headway_estimate;
}

std::vector<int> decide(const std::vector<ResidualSample>& residuals,
                        const ThresholdConfig& thresholds, int trusted_mode,
                        DecisionState& decisions, double t) {
    const double jds = thresholds.jds_for(trusted_mode);
    const double jis = thresholds.jis_for(trusted_mode);
    std::vector<int> activate;
    for (std::size_t i = 1; i < residuals.size(); ++i) {
        const auto& r = residuals[i];
        if (r.r_c >= jds && !decisions.v2x_flag[i]) {
            decisions.v2x_flag[i] = true;
            decisions.detection_time[i] = t;
            decisions.compromised_ids.push_back(static_cast<int>(i));
            activate.push_back(static_cast<int>(i));
        }
        if (r.isolator_active && !r.isolator_calibration && !decisions.v2i_flag &&
            std::abs(r.gamma) >= jis) {
            decisions.v2i_flag = true;
            decisions.isolation_time = t;
            decisions.isolation_vehicle = static_cast<int>(i);
        }
    }
    return activate;
}

} // namespace cacc
