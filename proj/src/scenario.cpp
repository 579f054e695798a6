#include "caccdet/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cacc {

using nlohmann::json;

const ModeParams& ScenarioConfig::mode(int id) const {
    for (const auto& m : modes)
        if (m.mode_id == id) return m;
    throw ConfigError("unknown mode id " + std::to_string(id));
}

const ObserverGains& ScenarioConfig::gains_for(int id) const {
    for (const auto& g : gains)
        if (g.mode_id == id) return g;
    throw ConfigError("no observer gains for mode " + std::to_string(id));
}

namespace {

int mode_id_by_name(const std::vector<ModeParams>& modes, const json& j) {
    if (j.is_number_integer()) return j.get<int>();
    const std::string name = j.get<std::string>();
    for (const auto& m : modes)
        if (m.name == name) return m.mode_id;
    throw ConfigError("unknown mode name '" + name + "'");
}

Mat42 gain_from_printed(const json& rows) {
    // gains appear in configs as 2x4 arrays (one row per output channel);
    // the observer uses the 4x2 transpose.
    if (!rows.is_array() || rows.size() != 2)
        throw ConfigError("observer gain must be a 2x4 array");
    Mat42 g;
    for (int r = 0; r < 2; ++r) {
        if (rows[r].size() != 4)
            throw ConfigError("observer gain must be a 2x4 array");
        for (int c = 0; c < 4; ++c)
            g(c, r) = rows[r][c].get<double>();
    }
    return g;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    ScenarioConfig c;
    try {
        c.name = j.value("name", std::string("scenario"));
        if (j.contains("road")) {
            const auto& r = j["road"];
            c.road.length = r.value("length_m", 600.0);
            c.road.num_links = r.value("num_links", 20);
            c.road.vehicle_length = r.value("vehicle_length_m", 5.0);
        }
        c.n_followers = j.value("n_followers", 11);
        c.duration = j.value("duration_s", 120.0);
        c.dt = j.value("dt_s", 0.05);
        c.seed = j.value("seed", std::uint64_t{1});
        c.noise_sigma = j.value("noise_sigma", 0.05);
        c.v2v_enabled = j.value("v2v_enabled", true);
        c.isolators_always_on = j.value("isolators_always_on", false);
        c.handover_headway_bound = j.value("handover_headway_bound", 2.5);
        c.handover_velocity_bound = j.value("handover_velocity_bound", 1.0);
        c.record_estimates = j.value("record_estimates", false);
        if (j.contains("observer_init_offset")) {
            const auto& o = j["observer_init_offset"];
            for (int i = 0; i < 4; ++i) c.observer_init_offset[i] = o[i].get<double>();
        }
        if (j.contains("execution"))
            c.execution = j["execution"].get<std::string>() == "parallel"
                              ? ExecutionPolicy::Parallel
                              : ExecutionPolicy::Serial;

        for (const auto& jm : j.at("modes")) {
            ModeParams m;
            m.mode_id = jm.at("id").get<int>();
            m.name = jm.value("name", "mode-" + std::to_string(m.mode_id));
            const auto& k = jm.at("gains");
            m.k1 = k[0].get<double>();
            m.k2 = k[1].get<double>();
            m.k3 = k[2].get<double>();
            m.time_headway = jm.at("time_headway_s").get<double>();
            m.standstill = jm.value("standstill_m", 2.0);
            m.engine_lag = jm.value("engine_lag_s", 0.1);
            c.modes.push_back(m);

            ObserverGains g;
            g.mode_id = m.mode_id;
            g.L = gain_from_printed(jm.at("detector_gain"));
            g.M = jm.contains("isolator_gain")
                      ? gain_from_printed(jm["isolator_gain"])
                      : g.L;
            c.gains.push_back(g);

            c.thresholds.j_ds.emplace_back(m.mode_id, jm.at("j_ds").get<double>());
            c.thresholds.j_is.emplace_back(m.mode_id, jm.at("j_is").get<double>());
        }
        c.thresholds.window = j.value("residual_window", std::size_t{20});

        for (const auto& js : j.at("schedule")) {
            c.schedule.entries.emplace_back(js.at("t").get<double>(),
                                            mode_id_by_name(c.modes, js.at("mode")));
        }
        if (j.contains("auto_mode") && !j["auto_mode"].is_null()) {
            AutoModeRule r;
            r.threshold = j["auto_mode"].value("threshold_mps", 18.0);
            r.band = j["auto_mode"].value("band_mps", 2.0);
            c.schedule.auto_rule = r;
        }

        if (j.contains("attacks")) {
            for (const auto& ja : j["attacks"]) {
                AttackSpec a;
                const std::string ch = ja.at("channel").get<std::string>();
                if (ch == "V2V") a.channel = AttackChannel::V2V;
                else if (ch == "V2I") a.channel = AttackChannel::V2I;
                else throw ConfigError("attack channel must be V2V or V2I");
                const std::string kind = ja.at("kind").get<std::string>();
                if (kind == "FDI") a.kind = AttackKind::FDI;
                else if (kind == "DoS" || kind == "Blackhole") a.kind = AttackKind::DoS;
                else if (kind == "Replay") a.kind = AttackKind::Replay;
                else throw ConfigError("attack kind must be FDI, DoS, Blackhole or Replay");
                a.target_vehicle = ja.at("target").get<int>();
                a.start = ja.at("start_s").get<double>();
                if (ja.contains("end_s") && !ja["end_s"].is_null())
                    a.end = ja["end_s"].get<double>();
                if (ja.contains("bias")) {
                    a.bias_velocity = ja["bias"].value("velocity", 0.0);
                    a.bias_acceleration = ja["bias"].value("acceleration", 0.0);
                    a.bias_control = ja["bias"].value("control", 0.0);
                }
                if (ja.contains("mode"))
                    a.mode_override = mode_id_by_name(c.modes, ja["mode"]);
                a.replay_delay = ja.value("delay_s", 0.0);
                c.attacks.push_back(a);
            }
        }

        if (j.contains("leader")) {
            const auto& jl = j["leader"];
            c.leader.accel_limit = jl.value("accel_limit_mps2", 3.0);
            c.leader.safety_enabled = jl.value("safety_enabled", true);
            c.leader.safety_time_gap = jl.value("safety_time_gap_s", 0.8);
            c.leader.safety_decel = jl.value("safety_decel_mps2", 2.5);
        }
        if (j.contains("disengage")) {
            const auto& jd = j["disengage"];
            c.disengage.range = jd.value("range_m", 30.0);
            c.disengage.min_speed = jd.value("min_speed_mps", 5.0);
            c.disengage.dwell = jd.value("dwell_s", 1.0);
            c.disengage.fallback_decel = jd.value("fallback_decel_mps2", 2.0);
        }

        const auto& jt = j.at("trace");
        if (jt.contains("path")) {
            std::filesystem::path p = jt["path"].get<std::string>();
            if (p.is_relative() && !base_dir.empty())
                p = std::filesystem::path(base_dir) / p;
            SpeedUnit unit = jt.value("units", std::string("mps")) == "mph"
                                 ? SpeedUnit::MilesPerHour
                                 : SpeedUnit::MetersPerSecond;
            c.trace = load_trace(p.string(), unit);
        } else if (jt.contains("synthetic")) {
            const auto& js = jt["synthetic"];
            CycleKind kind = js.at("kind").get<std::string>() == "highway"
                                 ? CycleKind::Highway
                                 : CycleKind::Urban;
            c.trace = synthetic_cycle(kind,
                                      js.value("duration_s", c.duration + 10.0),
                                      js.value("seed", std::uint64_t{1}));
        } else {
            throw ConfigError("trace needs either 'path' or 'synthetic'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(),
                          std::filesystem::path(path).parent_path().string());
}

ValidationReport validate_scenario(const ScenarioConfig& c) {
    ValidationReport rep;
    auto fail = [&](const std::string& check, const std::string& msg) {
        rep.issues.push_back({check, msg});
    };
    auto pass = [&](const std::string& check) { rep.passed.push_back(check); };

    if (c.modes.empty()) fail("modes", "at least one mode is required");
    for (const auto& m : c.modes) {
        const std::string tag = "mode '" + m.name + "'";
        if (m.time_headway <= 0.0) { fail(tag, "time_headway must be positive"); continue; }
        if (m.engine_lag <= 0.0) { fail(tag, "engine_lag must be positive"); continue; }
        if (m.standstill < 0.0) { fail(tag, "standstill must be nonnegative"); continue; }
        try {
            double alpha = closed_loop_eigencheck(m);
            if (alpha >= 0.0)
                fail(tag, "closed loop is not stable (spectral abscissa " +
                              std::to_string(alpha) + ")");
            else
                pass(tag + " closed-loop eigencheck");
            const auto sys = build_matrices(m, c.v2v_enabled);
            const auto& g = c.gains_for(m.mode_id);
            const Mat4 el = sys.A - g.L * sys.C;
            const Mat4 em = sys.A - g.M * sys.C;
            double al = spectral_abscissa(el), am = spectral_abscissa(em);
            if (al >= 0.0)
                fail(tag, "detector error matrix A - LC unstable (abscissa " +
                              std::to_string(al) + ")");
            else
                pass(tag + " detector eigencheck");
            if (am >= 0.0)
                fail(tag, "isolator error matrix A - MC unstable (abscissa " +
                              std::to_string(am) + ")");
            else
                pass(tag + " isolator eigencheck");
        } catch (const std::exception& e) {
            fail(tag, e.what());
        }
    }

    try {
        validate_schedule(c.schedule);
        int m0 = commanded_mode(c.schedule, 0.0, 0.0);
        (void)c.mode(m0);
        pass("schedule");
    } catch (const std::exception& e) {
        fail("schedule", e.what());
    }

    for (const auto& [id, v] : c.thresholds.j_ds)
        if (v <= 0.0) fail("thresholds", "J_DS must be positive for mode " + std::to_string(id));
    for (const auto& [id, v] : c.thresholds.j_is)
        if (v <= 0.0) fail("thresholds", "J_IS must be positive for mode " + std::to_string(id));
    if (c.thresholds.window == 0) fail("thresholds", "residual window must be positive");
    if (c.thresholds.window > kMaxResidualWindow)
        fail("thresholds", "residual window larger than " +
                               std::to_string(kMaxResidualWindow) + " samples");

    for (std::size_t k = 0; k < c.attacks.size(); ++k) {
        const auto& a = c.attacks[k];
        const std::string tag = "attack[" + std::to_string(k) + "]";
        if (a.target_vehicle < 1 || a.target_vehicle > c.n_followers)
            fail(tag, "target vehicle out of range");
        if (!(a.start < a.end)) fail(tag, "start must precede end");
        if (a.channel == AttackChannel::V2I && a.kind == AttackKind::FDI) {
            bool known = false;
            for (const auto& m : c.modes) known |= (m.mode_id == a.mode_override);
            if (!known) fail(tag, "mode override is not a configured mode");
        }
        if (a.channel == AttackChannel::V2I && a.kind == AttackKind::Replay)
            fail(tag, "replay is only defined for the V2V channel");
        if (a.channel == AttackChannel::V2V && a.kind == AttackKind::Replay &&
            a.replay_delay <= 0.0)
            fail(tag, "replay delay must be positive");
    }
    if (rep.issues.empty()) pass("attacks");

    if (c.duration < 0.0) fail("horizon", "duration must be nonnegative");
    if (c.dt <= 0.0) fail("horizon", "dt must be positive");
    const double steps = c.duration / c.dt;
    if (std::abs(steps - std::round(steps)) > 1e-6)
        fail("horizon", "duration must be a multiple of dt");

    if (c.trace.t.empty()) {
        fail("trace", "no trace configured");
    } else if (c.trace.duration() < c.duration - 1e-9) {
        fail("trace", "trace shorter than the simulation horizon");
    } else {
        bool good = true;
        for (std::size_t i = 0; good && i < c.trace.t.size(); ++i) {
            if (c.trace.v[i] < 0.0) {
                fail("trace", "negative velocity at sample " + std::to_string(i));
                good = false;
            }
            if (i > 0 && c.trace.t[i] <= c.trace.t[i - 1]) {
                fail("trace", "non-monotone time at sample " + std::to_string(i));
                good = false;
            }
            if (i > 0 && c.trace.t[i] - c.trace.t[i - 1] > 1.0 + 1e-9) {
                fail("trace", "gap larger than 1 s at sample " + std::to_string(i));
                good = false;
            }
        }
        if (good) pass("trace coverage");
    }

    double min_span = 0.0;
    for (const auto& m : c.modes)
        min_span = std::max(min_span, m.standstill);
    const double need =
        (c.n_followers + 1) * (c.road.vehicle_length + min_span);
    if (c.road.length <= need)
        fail("road", "ring shorter than n * (vehicle_length + standstill)");
    else
        pass("ring capacity");

    return rep;
}

} // namespace cacc
