#pragma once

#include "caccdet/comms.hpp"
#include "caccdet/core_model.hpp"

#include <array>
#include <vector>

namespace cacc {

/// Detector (L) and isolator (M) output-injection gains for one mode.
/// Both error matrices A - LC and A - MC must have negative spectral
/// abscissa; checked when a scenario is loaded.
struct ObserverGains {
    int mode_id = 1;
    Mat42 L = Mat42::Zero();
    Mat42 M = Mat42::Zero();
};

/// Largest supported residual window; keeps DetectorState trivially
/// copyable so the per-step bank updates stay allocation-free.
inline constexpr std::size_t kMaxResidualWindow = 64;

/// V2X detection-scheme observer state for one vehicle: the estimate, the
/// sliding window of squared headway-error samples and the windowed residual.
struct DetectorState {
    Vec4 chi_hat = Vec4::Zero();
    std::array<double, kMaxResidualWindow> window{}; // ring of squared errors
    std::size_t win_head = 0;                        // next slot to overwrite
    std::size_t win_len = 0;
    double window_sum = 0.0;
    double residual = 0.0; // r_c >= 0 [m^2]

    void push_error(double e, std::size_t W) {
        window[win_head] = e * e;
        win_head = (win_head + 1) % W;
        if (win_len < W) ++win_len;
        // oldest-first summation, same order the window filled
        double s = 0.0;
        const std::size_t start = (win_head + W - win_len) % W;
        for (std::size_t k = 0; k < win_len; ++k) s += window[(start + k) % W];
        window_sum = s;
    }
};

/// V2I isolation-scheme observer. Inactive until its vehicle's detector
/// flags; on activation psi_hat is initialized to the detector estimate.
struct IsolatorState {
    Vec4 psi_hat = Vec4::Zero();
    bool active = false;
    bool calibration_only = false; // activated at t=0 for threshold studies
    double activation_time = 0.0;
    double residual = 0.0;         // gamma [m]
};

/// Per-mode residual thresholds and the shared window length.
struct ThresholdConfig {
    std::vector<std::pair<int, double>> j_ds; // (mode id, J_DS) [m^2]
    std::vector<std::pair<int, double>> j_is; // (mode id, J_IS) [m]
    std::size_t window = 20;                  // W samples at 20 Hz

    double jds_for(int mode) const;
    double jis_for(int mode) const;
};

/// Latching attack flags plus the per-vehicle detection bookkeeping of
/// Algorithm 1's outputs.
struct DecisionState {
    std::vector<bool> v2x_flag;          // index 0 unused (leader)
    std::vector<double> detection_time;  // NaN while unflagged
    std::vector<int> compromised_ids;    // in flag order
    bool v2i_flag = false;
    double isolation_time = 0.0;
    int isolation_vehicle = 0;

    explicit DecisionState(std::size_t n_vehicles = 0)
        : v2x_flag(n_vehicles + 1, false),
          detection_time(n_vehicles + 1,
                         std::numeric_limits<double>::quiet_NaN()) {}
};

/// One Euler step of the detector,
///   chi_hat' = A chi_hat + D chi_hat_pre - S s + L (y - C chi_hat),
/// run in the supervisor's trusted mode. pred_estimate is the predecessor's
/// detector estimate (leader truth for vehicle 1). The estimate mirrors the
/// plant's physical clamps (velocity and headway nonnegative).
DetectorState detector_step(const DetectorState& state, const Vec4& pred_estimate,
                            const Measurement& y, const SystemMatrices& m,
                            const ObserverGains& gains, const ModeParams& params,
                            double dt);

/// One Euler step of the isolator. The controller-feedforward row consumes
/// the payload actually received over V2V (so V2V corruption is reproduced
/// inside the model and does not excite gamma); the kinematic row uses the
/// predecessor estimate's velocity. Throws if called while inactive.
IsolatorState isolator_step(const IsolatorState& state, const Vec4& pred_estimate,
                            const Measurement& y, const V2VPayload& received,
                            const SystemMatrices& m, const ObserverGains& gains,
                            const ModeParams& params, double dt);

/// Windowed DS residual: max(0, sum(own e^2) - sum(pred e^2)) over the last
/// W aligned samples. The leader window is identically zero.
double ds_residual(const std::vector<double>& own_window,
                   const std::vector<double>& pred_window);

/// IS residual: headway-channel innovation y_h - H_hat.
double is_residual(const Measurement& y, double headway_estimate);

/// Inputs to one decision pass, per vehicle.
struct ResidualSample {
    double r_c = 0.0;
    double gamma = 0.0;
    bool isolator_active = false;
    bool isolator_calibration = false;
};

/// Applies Algorithm 1's threshold logic: latches per-vehicle V2X flags,
/// records detection times, requests isolator activation (returned indices)
/// and latches the platoon V2I flag. Calibration-only isolators never raise
/// the V2I flag.
std::vector<int> decide(const std::vector<ResidualSample>& residuals,
                        const ThresholdConfig& thresholds, int trusted_mode,
                        DecisionState& decisions, double t);

} // namespace cacc
