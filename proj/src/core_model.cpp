#include "caccdet/core_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace cacc {

SystemMatrices build_matrices(const ModeParams& p, bool v2v_active) {
    if (p.time_headway <= 0.0)
        throw ParameterError("time_headway must be positive");
    if (p.engine_lag <= 0.0)
        throw ParameterError("engine_lag must be positive");
    if (p.standstill < 0.0)
        throw ParameterError("standstill must be nonnegative");

    const double T = p.time_headway;
    const double sig = p.engine_lag;
    const double phi = v2v_active ? 1.0 : 0.0;

    SystemMatrices m;
    m.A << 0.0, -1.0, 0.0, 0.0,
           0.0, 0.0, 1.0, 0.0,
           0.0, 0.0, -1.0 / sig, 1.0 / sig,
           p.k1 / T, -(p.k1 * T + p.k2) / T, -(p.k2 * T + p.k3) / T, -1.0 / T;
    m.D << 0.0, 1.0, 0.0, 0.0,
           0.0, 0.0, 0.0, 0.0,
           0.0, 0.0, 0.0, 0.0,
           0.0, p.k2 / T, p.k3 / T, phi / T;
    m.S << 0.0, 0.0, 0.0, p.k1 / T;
    m.C << 1.0, 0.0, 0.0, 0.0,
           0.0, 1.0, 0.0, 0.0;
    return m;
}

Vec4 vehicle_derivative(const VehicleState& state, const V2VPayload& received,
                        double pred_true_velocity, const SystemMatrices& m,
                        const ModeParams& params, const Vec4& noise) {
    const Vec4 chi = state.chi();
    Vec4 d = m.A * chi;
    // Headway kinematics always sees the physical predecessor velocity.
    d[0] = pred_true_velocity - state.velocity;
    if (received.link_active) {
        d[3] += m.D(3, 1) * received.pred_velocity +
                m.D(3, 2) * received.pred_acceleration +
                m.D(3, 3) * received.pred_control;
    }
    d[3] -= m.S[3] * params.standstill;
    d += noise;
    return d;
}

VehicleState step_euler(const VehicleState& state, const Vec4& deriv, double dt,
                        double ring_length) {
    VehicleState next = state;
    Vec4 x = state.chi() + dt * deriv;
    if (x[1] < 0.0) x[1] = 0.0;
    next.set_chi(x);
    next.position = std::fmod(state.position + dt * state.velocity, ring_length);
    if (next.position < 0.0) next.position += ring_length;
    return next;
}

double spectral_abscissa(const Mat4& m) {
    Eigen::EigenSolver<Mat4> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigen solver failed to converge");
    return solver.eigenvalues().real().maxCoeff();
}

double closed_loop_eigencheck(const ModeParams& params) {
    return spectral_abscissa(build_matrices(params, true).A);
}

} // namespace cacc
