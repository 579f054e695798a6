#include "caccdet/detection.hpp"
#include "caccdet/supervisor.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cacc;

namespace {

ModeParams highway() {
    ModeParams m;
    m.mode_id = 1;
    m.k1 = 0.2; m.k2 = 1.5; m.k3 = 2.0;
    m.time_headway = 0.5;
    return m;
}

ObserverGains highway_gains() {
    ObserverGains g;
    g.mode_id = 1;
    g.L << 0.7116, -0.1377,
          -0.1377, 0.2284,
           0.0990, -0.0894,
           0.0983, -0.0998;
    g.M << 0.0546, -0.0002,
          -0.0002, 0.0032,
           0.0032, -0.0012,
           0.0031, -0.0013;
    return g;
}

ThresholdConfig thresholds() {
    ThresholdConfig t;
    t.j_ds = {{1, 4.0}, {2, 1.0}};
    t.j_is = {{1, 6.0}, {2, 3.0}};
    return t;
}

} // namespace

TEST_CASE("ds_residual") {
    SUBCASE("identical windows cancel") {
        std::vector<double> w(20, 0.04);
        CHECK(ds_residual(w, w) == 0.0);
    }
    SUBCASE("larger predecessor energy clamps to zero") {
        std::vector<double> own(20, 0.01), pred(20, 0.09);
        CHECK(ds_residual(own, pred) == 0.0);
    }
    SUBCASE("constant 0.5 m error over W=20 against a clean predecessor") {
        std::vector<double> own(20, 0.25), pred(20, 0.0);
        const double r = ds_residual(own, pred);
        CHECK(r == doctest::Approx(5.0)); // 20 * 0.5^2, crosses J_DS = 4
        CHECK(r >= thresholds().jds_for(1));
    }
    SUBCASE("partial windows use available samples") {
        std::vector<double> own(7, 0.25), pred;
        CHECK(ds_residual(own, pred) == doctest::Approx(7 * 0.25));
    }
}

TEST_CASE("is_residual") {
    Measurement y;
    y.headway = 6.1;
    CHECK(is_residual(y, 6.1) == 0.0);
    y.headway = 12.4;
    CHECK(is_residual(y, 6.1) == doctest::Approx(6.3));
    CHECK(std::abs(is_residual(y, 6.1)) >= thresholds().jis_for(1));
    y.headway = 8.0;
    CHECK(is_residual(y, 10.0) == doctest::Approx(-2.0));
    CHECK(std::abs(is_residual(y, 10.0)) < thresholds().jis_for(2));
}

TEST_CASE("detector at the true state stays there") {
    const ModeParams p = highway();
    const auto sys = build_matrices(p, true);
    const auto g = highway_gains();
    const double v = 20.0;
    const double heq = p.time_headway * v + p.standstill;

    DetectorState d;
    d.chi_hat << heq, v, 0.0, 0.0;
    Vec4 pred;
    pred << heq, v, 0.0, 0.0;
    Measurement y{heq, v, 0.0};
    for (int k = 0; k < 400; ++k) d = detector_step(d, pred, y, sys, g, p, 0.05);
    CHECK(std::abs(d.chi_hat[0] - heq) < 1e-12);
    CHECK(std::abs(d.chi_hat[1] - v) < 1e-12);
}

TEST_CASE("detector error decays like the error dynamics (A - LC)e") {
    // vehicle 1 with the leader as predecessor: the error obeys
    // e' = (A - LC) e exactly; oracle is a fine-step RK4 integration
    const ModeParams p = highway();
    const auto sys = build_matrices(p, true);
    const auto g = highway_gains();
    const Mat4 F = sys.A - g.L * sys.C;

    const double v = 20.0;
    const double heq = p.time_headway * v + p.standstill;
    Vec4 truth;
    truth << heq, v, 0.0, 0.0;

    DetectorState d;
    d.chi_hat = truth + Vec4(1.0, 1.0, 0.0, 0.0);
    Vec4 e_oracle = Vec4(-1.0, -1.0, 0.0, 0.0); // e = chi - chi_hat

    const double dt = 0.05;
    Measurement y{heq, v, 0.0};
    for (int k = 0; k < 200; ++k) {
        d = detector_step(d, truth, y, sys, g, p, dt);
        const double hs = dt / 10.0;
        for (int j = 0; j < 10; ++j) {
            const Vec4 k1 = F * e_oracle;
            const Vec4 k2 = F * (e_oracle + 0.5 * hs * k1);
            const Vec4 k3 = F * (e_oracle + 0.5 * hs * k2);
            const Vec4 k4 = F * (e_oracle + hs * k3);
            e_oracle += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        const Vec4 e_engine = truth - d.chi_hat;
        CHECK(std::abs(e_engine[0] - e_oracle[0]) < 2e-2);
    }
    CHECK(std::abs(truth[0] - d.chi_hat[0]) < 0.05); // within 10 s
}

TEST_CASE("isolator reproduces the plant under a corrupted payload") {
    // V2V FDI with matching mode: the isolator consumes the same corrupted
    // payload as the plant, so gamma stays near zero
    const ModeParams p = highway();
    const auto sys = build_matrices(p, true);
    const auto g = highway_gains();
    const double dt = 0.05;
    const double v = 20.0;
    const double heq = p.time_headway * v + p.standstill;

    VehicleState plant;
    plant.headway = heq;
    plant.velocity = v;
    IsolatorState iso;
    iso.active = true;
    iso.psi_hat = plant.chi();

    VehicleState pred; // predecessor cruising steadily
    pred.velocity = v;
    double worst = 0.0;
    for (int k = 0; k < 600; ++k) {
        V2VPayload pay;
        pay.pred_velocity = pred.velocity + 1.0; // corrupted
        pay.pred_acceleration = 0.0;
        pay.pred_control = 0.0;
        const Vec4 d = vehicle_derivative(plant, pay, pred.velocity, sys, p,
                                          Vec4::Zero());
        plant = step_euler(plant, d, dt, 1e9);
        Measurement y{plant.headway, plant.velocity, k * dt};
        iso = isolator_step(iso, pred.chi(), y, pay, sys, g, p, dt);
        worst = std::max(worst, std::abs(is_residual(y, iso.psi_hat[0])));
    }
    CHECK(worst < 0.3); // far below J_IS = 6
}

TEST_CASE("isolator flags a plant running foreign gains") {
    // plant executes urban gains while the isolator models highway
    ModeParams urban;
    urban.mode_id = 2;
    urban.k1 = 0.2; urban.k2 = 2.0; urban.k3 = 0.0;
    urban.time_headway = 1.3;
    const ModeParams p = highway();
    const auto sys_hw = build_matrices(p, true);
    const auto sys_urb = build_matrices(urban, true);
    const auto g = highway_gains();
    const double dt = 0.05;
    const double v = 25.0;

    VehicleState plant;
    plant.headway = p.time_headway * v + p.standstill;
    plant.velocity = v;
    IsolatorState iso;
    iso.active = true;
    iso.psi_hat = plant.chi();
    VehicleState pred;
    pred.velocity = v;

    double worst = 0.0;
    for (int k = 0; k < 1200; ++k) {
        V2VPayload pay;
        pay.pred_velocity = v;
        const Vec4 d = vehicle_derivative(plant, pay, v, sys_urb, urban,
                                          Vec4::Zero());
        plant = step_euler(plant, d, dt, 1e9);
        Measurement y{plant.headway, plant.velocity, k * dt};
        iso = isolator_step(iso, pred.chi(), y, pay, sys_hw, g, p, dt);
        worst = std::max(worst, std::abs(is_residual(y, iso.psi_hat[0])));
    }
    CHECK(worst >= 6.0); // crosses the highway J_IS
}

TEST_CASE("isolator_step requires an active isolator") {
    IsolatorState idle;
    Measurement y;
    V2VPayload pay;
    const ModeParams p = highway();
    const auto sys = build_matrices(p, true);
    CHECK_THROWS_AS(
        isolator_step(idle, Vec4::Zero(), y, pay, sys, highway_gains(), p, 0.05),
        std::logic_error);
}

TEST_CASE("decide latches flags and activates isolators") {
    DecisionState ds(11);
    std::vector<ResidualSample> rs(12);

    SUBCASE("crossing J_DS flags the vehicle once") {
        rs[8].r_c = 4.2;
        auto act = decide(rs, thresholds(), 1, ds, 10.0);
        REQUIRE(act.size() == 1);
        CHECK(act[0] == 8);
        CHECK(ds.v2x_flag[8]);
        CHECK(ds.detection_time[8] == 10.0);
        CHECK(ds.compromised_ids == std::vector<int>{8});
        // latching: a later crossing does not re-activate
        auto again = decide(rs, thresholds(), 1, ds, 11.0);
        CHECK(again.empty());
        CHECK(ds.detection_time[8] == 10.0);
    }
    SUBCASE("quiet residuals leave the state untouched") {
        auto act = decide(rs, thresholds(), 1, ds, 5.0);
        CHECK(act.empty());
        CHECK_FALSE(ds.v2i_flag);
        for (int i = 1; i <= 11; ++i) CHECK_FALSE(ds.v2x_flag[i]);
    }
    SUBCASE("gamma crossing J_IS raises the platoon flag") {
        rs[8].isolator_active = true;
        rs[8].gamma = 6.5;
        decide(rs, thresholds(), 1, ds, 30.0);
        CHECK(ds.v2i_flag);
        CHECK(ds.isolation_time == 30.0);
        CHECK(ds.isolation_vehicle == 8);
    }
    SUBCASE("negative gamma uses the absolute value") {
        rs[4].isolator_active = true;
        rs[4].gamma = -3.4;
        decide(rs, thresholds(), 2, ds, 30.0);
        CHECK(ds.v2i_flag);
    }
    SUBCASE("calibration isolators never raise the platoon flag") {
        rs[8].isolator_active = true;
        rs[8].isolator_calibration = true;
        rs[8].gamma = 40.0;
        decide(rs, thresholds(), 1, ds, 30.0);
        CHECK_FALSE(ds.v2i_flag);
    }
}

TEST_CASE("threshold lookup rejects unknown modes") {
    CHECK_THROWS_AS(thresholds().jds_for(9), ConfigError);
}
