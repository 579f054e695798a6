#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>

namespace cacc {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Vec2 = Eigen::Vector2d;

/// Augmented state of one vehicle: headway, velocity, acceleration,
/// commanded control input. Position along the ring is carried separately
/// for geometry/logging and is not part of the controller state.
struct VehicleState {
    double headway = 0.0;       // gap to predecessor [m]
    double velocity = 0.0;      // [m/s]
    double acceleration = 0.0;  // [m/s^2]
    double control_input = 0.0; // commanded acceleration [m/s^2]
    double position = 0.0;      // along ring, [0, ring_length) [m]

    Vec4 chi() const { return {headway, velocity, acceleration, control_input}; }
    void set_chi(const Vec4& x) {
        headway = x[0]; velocity = x[1]; acceleration = x[2]; control_input = x[3];
    }
};

/// Per-mode controller constants. The gain triple (k1,k2,k3) follows the
/// constant-time-gap CACC law
///   T u' = k1 (h - T v - s) + k2 (v_pre - v - T a) + k3 (a_pre - a) + phi u_pre - u
/// where the k2 term is the derivative of the spacing error. The derived
/// feedforward entries (ku, kbar2, kbar3) are filled in on construction.
struct ModeParams {
    int mode_id = 1;            // in {1..m}
    std::string name;
    double k1 = 0.0, k2 = 0.0, k3 = 0.0;
    double time_headway = 0.5;  // T [s]
    double standstill = 2.0;    // s [m]
    double engine_lag = 0.1;    // Sigma [s]

    double ku() const { return -1.0 / time_headway; }
    double kbar2() const { return k2 / time_headway; }
    double kbar3() const { return k3 / time_headway; }
};

/// System matrices of the single-vehicle closed loop.
/// Row 1 is headway kinematics, rows 2-3 the drivetrain, row 4 the controller.
struct SystemMatrices {
    Mat4 A = Mat4::Zero();
    Mat4 D = Mat4::Zero();   // predecessor coupling; (4,4) gated by phi
    Vec4 S = Vec4::Zero();   // standstill column, S(4) == A(4,1)
    Mat24 C = Mat24::Zero(); // outputs: headway and velocity
};

/// One 20 Hz sample of a vehicle's measured outputs.
struct Measurement {
    double headway = 0.0;   // [m]
    double velocity = 0.0;  // [m/s]
    double timestamp = 0.0; // [s], multiple of dt

    Vec2 y() const { return {headway, velocity}; }
};

/// Wireless payload received from the predecessor. When link_active is
/// false the payload fields are absent and the whole row-4 feedforward
/// contribution must be treated as zero by consumers.
struct V2VPayload {
    double pred_velocity = 0.0;     // [m/s]
    double pred_acceleration = 0.0; // [m/s^2]
    double pred_control = 0.0;      // [m/s^2]
    bool link_active = true;
    double timestamp = 0.0;
};

class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds A, D, S, C for one mode. v2v_active gates only the D(4,4)
/// wireless feedforward entry (phi in the matrix structure).
SystemMatrices build_matrices(const ModeParams& params, bool v2v_active);

/// Closed-loop derivative of one vehicle. Row 1 uses the predecessor's true
/// velocity (physical kinematics, no channel can alter it); row 4 uses the
/// received payload, zeroed entirely when the link is down.
Vec4 vehicle_derivative(const VehicleState& state, const V2VPayload& received,
                        double pred_true_velocity, const SystemMatrices& m,
                        const ModeParams& params, const Vec4& noise);

/// Forward-Euler step: chi += dt*deriv, velocity clamped at zero, position
/// advanced by the pre-step velocity modulo the ring length.
VehicleState step_euler(const VehicleState& state, const Vec4& deriv, double dt,
                        double ring_length);

/// Max real part of the eigenvalues of the single-vehicle closed-loop matrix.
/// Must be negative for a mode definition to be accepted.
double closed_loop_eigencheck(const ModeParams& params);

/// Spectral abscissa of an arbitrary 4x4 (used for observer error matrices).
double spectral_abscissa(const Mat4& m);

} // namespace cacc
