#include "caccdet/sim_log.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace cacc {

std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s, int row) {
    double v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("log parse error at row " + std::to_string(row) +
                                 ": bad number '" + s + "'");
    return v;
}

std::string attack_to_meta(const AttackSpec& a) {
    std::ostringstream os;
    os << (a.channel == AttackChannel::V2V ? "V2V" : "V2I") << ','
       << (a.kind == AttackKind::FDI ? "FDI"
           : a.kind == AttackKind::DoS ? "DoS" : "Replay")
       << ',' << a.target_vehicle << ',' << format_double(a.start) << ','
       << (std::isinf(a.end) ? "inf" : format_double(a.end));
    return os.str();
}

AttackSpec attack_from_meta(const std::string& s) {
    AttackSpec a;
    std::istringstream is(s);
    std::string tok;
    std::getline(is, tok, ',');
    a.channel = tok == "V2V" ? AttackChannel::V2V : AttackChannel::V2I;
    std::getline(is, tok, ',');
    a.kind = tok == "FDI" ? AttackKind::FDI
             : tok == "DoS" ? AttackKind::DoS : AttackKind::Replay;
    std::getline(is, tok, ',');
    a.target_vehicle = std::stoi(tok);
    std::getline(is, tok, ',');
    a.start = std::stod(tok);
    std::getline(is, tok, ',');
    a.end = tok == "inf" ? std::numeric_limits<double>::infinity() : std::stod(tok);
    return a;
}

} // namespace

int count_collisions(const SimLog& log, double rearm) {
    if (log.rows.empty()) return 0;
    const std::size_t nv = log.rows.front().h.size();
    std::vector<bool> touching(nv, false);
    int count = 0;
    for (const auto& row : log.rows) {
        for (std::size_t i = 0; i < nv; ++i) {
            if (row.h[i] == 0.0) {
                if (!touching[i]) ++count;
                touching[i] = true;
            } else if (row.h[i] > rearm) {
                touching[i] = false;
            }
        }
    }
    return count;
}

std::vector<std::pair<double, int>> disengagement_events(const SimLog& log) {
    std::vector<std::pair<double, int>> events;
    if (log.rows.empty()) return events;
    const auto& d = log.meta.disengage;
    const std::size_t nv = log.rows.front().h.size();
    std::vector<bool> diseng(nv, false);
    std::vector<double> timer(nv, 0.0);
    for (const auto& row : log.rows) {
        for (std::size_t i = 1; i < nv; ++i) {
            if (diseng[i]) continue;
            if (row.h[i] > d.range && row.v[i] > d.min_speed) {
                timer[i] += log.meta.dt;
                if (timer[i] >= d.dwell - 1e-9) {
                    for (std::size_t j = i; j < nv; ++j) {
                        if (!diseng[j]) {
                            diseng[j] = true;
                            events.emplace_back(row.t, static_cast<int>(j));
                        }
                    }
                }
            } else {
                timer[i] = 0.0;
            }
        }
    }
    return events;
}

SummaryReport summarize(const SimLog& log) {
    SummaryReport s;
    s.aborted = log.aborted;
    if (log.rows.empty()) return s;
    const std::size_t nv = log.rows.front().h.size();

    // first detection per vehicle, overall first, and the isolation row
    std::vector<double> det_time(nv, std::numeric_limits<double>::quiet_NaN());
    double iso_time = std::numeric_limits<double>::quiet_NaN();
    int iso_vehicle = 0;
    for (const auto& row : log.rows) {
        for (std::size_t i = 1; i < nv; ++i)
            if (row.v2x_flag[i] && std::isnan(det_time[i])) det_time[i] = row.t;
        if (row.v2i_flag && std::isnan(iso_time)) {
            iso_time = row.t;
            // attribute to the flagged vehicle whose residual crossed
            double best = 0.0;
            for (std::size_t i = 1; i < nv; ++i)
                if (row.v2x_flag[i] && std::abs(row.gamma[i]) > best) {
                    best = std::abs(row.gamma[i]);
                    iso_vehicle = static_cast<int>(i);
                }
        }
    }

    int first_vehicle = 0;
    double first_time = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < nv; ++i)
        if (!std::isnan(det_time[i]) && det_time[i] < first_time) {
            first_time = det_time[i];
            first_vehicle = static_cast<int>(i);
        }
    if (first_vehicle != 0) {
        DetectionSummary d;
        d.vehicle = first_vehicle;
        d.time = first_time;
        double start = std::numeric_limits<double>::infinity();
        for (const auto& a : log.meta.attacks)
            if (a.target_vehicle == first_vehicle) start = std::min(start, a.start);
        if (std::isfinite(start)) d.delay = first_time - start;
        s.detection = d;
    }
    if (!std::isnan(iso_time)) {
        IsolationSummary iso;
        iso.time = iso_time;
        if (iso_vehicle != 0 && !std::isnan(det_time[iso_vehicle]))
            iso.delay = iso_time - det_time[iso_vehicle];
        s.isolation = iso;
    }

    // false alarms: flags on vehicles no attack targets, plus a V2I flag
    // raised in a run without any V2I-channel attack
    for (std::size_t i = 1; i < nv; ++i) {
        if (std::isnan(det_time[i])) continue;
        bool targeted = false;
        for (const auto& a : log.meta.attacks)
            targeted |= (a.target_vehicle == static_cast<int>(i));
        if (!targeted) ++s.false_alarms;
    }
    if (!std::isnan(iso_time)) {
        bool any_v2i = false;
        for (const auto& a : log.meta.attacks)
            any_v2i |= (a.channel == AttackChannel::V2I);
        if (!any_v2i) ++s.false_alarms;
    }

    double minh = std::numeric_limits<double>::infinity();
    for (const auto& row : log.rows)
        for (std::size_t i = 1; i < nv; ++i) minh = std::min(minh, row.h[i]);
    s.min_headway = minh;

    s.collisions = count_collisions(log);
    s.disengagements = static_cast<int>(disengagement_events(log).size());
    return s;
}

void write_log_csv(const SimLog& log, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write log file: " + path);
    const auto& m = log.meta;
    f << "# scenario=" << m.scenario << "\n";
    f << "# seed=" << m.seed << "\n";
    f << "# dt=" << format_double(m.dt) << "\n";
    f << "# n_vehicles=" << m.n_vehicles << "\n";
    f << "# disengage=" << format_double(m.disengage.range) << ','
      << format_double(m.disengage.min_speed) << ','
      << format_double(m.disengage.dwell) << ','
      << format_double(m.disengage.fallback_decel) << "\n";
    for (const auto& a : m.attacks) f << "# attack=" << attack_to_meta(a) << "\n";
    if (log.aborted) f << "# aborted=1\n";
    f << "t";
    for (int i = 0; i < m.n_vehicles; ++i) {
        f << ",pos_" << i << ",v_" << i << ",a_" << i << ",u_" << i << ",h_" << i
          << ",mode_" << i << ",rc_" << i << ",gamma_" << i << ",v2x_flag_" << i;
    }
    f << ",v2i_flag\n";
    for (const auto& r : log.rows) {
        f << format_double(r.t);
        for (int i = 0; i < m.n_vehicles; ++i) {
            f << ',' << format_double(r.pos[i]) << ',' << format_double(r.v[i])
              << ',' << format_double(r.a[i]) << ',' << format_double(r.u[i])
              << ',' << format_double(r.h[i]) << ',' << r.mode[i] << ','
              << format_double(r.rc[i]) << ',' << format_double(r.gamma[i])
              << ',' << r.v2x_flag[i];
        }
        f << ',' << r.v2i_flag << '\n';
    }
}

SimLog read_log_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open log file: " + path);
    SimLog log;
    std::string line;
    int rownum = 0;
    bool header_seen = false;
    int nv = 0;
    while (std::getline(f, line)) {
        ++rownum;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string val = line.substr(eq + 1);
            if (key == "scenario") log.meta.scenario = val;
            else if (key == "seed") log.meta.seed = std::stoull(val);
            else if (key == "dt") log.meta.dt = std::stod(val);
            else if (key == "n_vehicles") log.meta.n_vehicles = std::stoi(val);
            else if (key == "aborted") log.aborted = val == "1";
            else if (key == "attack") log.meta.attacks.push_back(attack_from_meta(val));
            else if (key == "disengage") {
                std::istringstream is(val);
                std::string tok;
                std::getline(is, tok, ','); log.meta.disengage.range = std::stod(tok);
                std::getline(is, tok, ','); log.meta.disengage.min_speed = std::stod(tok);
                std::getline(is, tok, ','); log.meta.disengage.dwell = std::stod(tok);
                std::getline(is, tok, ','); log.meta.disengage.fallback_decel = std::stod(tok);
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            nv = log.meta.n_vehicles;
            continue;
        }
        LogRow r;
        std::istringstream is(line);
        std::string tok;
        auto next = [&]() {
            if (!std::getline(is, tok, ','))
                throw std::runtime_error("log parse error at row " +
                                         std::to_string(rownum) + ": truncated row");
            return tok;
        };
        r.t = parse_double(next(), rownum);
        for (int i = 0; i < nv; ++i) {
            r.pos.push_back(parse_double(next(), rownum));
            r.v.push_back(parse_double(next(), rownum));
            r.a.push_back(parse_double(next(), rownum));
            r.u.push_back(parse_double(next(), rownum));
            r.h.push_back(parse_double(next(), rownum));
            r.mode.push_back(static_cast<int>(parse_double(next(), rownum)));
            r.rc.push_back(parse_double(next(), rownum));
            r.gamma.push_back(parse_double(next(), rownum));
            r.v2x_flag.push_back(static_cast<int>(parse_double(next(), rownum)));
        }
        r.v2i_flag = static_cast<int>(parse_double(next(), rownum));
        log.rows.push_back(std::move(r));
    }
    if (!header_seen) throw std::runtime_error("log has no header row");
    return log;
}

std::string summary_to_json(const SummaryReport& s) {
    nlohmann::ordered_json j;
    if (s.detection) {
        j["detection"]["vehicle"] = s.detection->vehicle;
        j["detection"]["time"] = s.detection->time;
        if (s.detection->delay) j["detection"]["delay"] = *s.detection->delay;
        else j["detection"]["delay"] = nullptr;
    } else {
        j["detection"] = nullptr;
    }
    if (s.isolation) {
        j["isolation"]["time"] = s.isolation->time;
        if (s.isolation->delay) j["isolation"]["delay"] = *s.isolation->delay;
        else j["isolation"]["delay"] = nullptr;
    } else {
        j["isolation"] = nullptr;
    }
    j["false_alarms"] = s.false_alarms;
    j["min_headway"] = s.min_headway;
    j["collisions"] = s.collisions;
    j["disengagements"] = s.disengagements;
    if (s.aborted) j["aborted"] = true;
    return j.dump(2) + "\n";
}

CalibrationResult calibrate_thresholds(const SimLog& log, double margin,
                                       double floor_jds, double floor_jis) {
    for (const auto& row : log.rows) {
        if (row.v2i_flag)
            throw std::invalid_argument("calibration log contains a V2I flag");
        for (int f : row.v2x_flag)
            if (f) throw std::invalid_argument("calibration log contains a V2X flag");
    }
    CalibrationResult out;
    out.thresholds.window = 20;
    for (const auto& row : log.rows) {
        const int mode = row.mode.empty() ? 0 : row.mode[0];
        CalibrationModeStats* s = nullptr;
        for (auto& st : out.stats)
            if (st.mode_id == mode) s = &st;
        if (!s) {
            out.stats.push_back({mode, 0.0, 0.0});
            s = &out.stats.back();
        }
        for (std::size_t i = 1; i < row.rc.size(); ++i) {
            s->max_rc = std::max(s->max_rc, row.rc[i]);
            s->max_gamma = std::max(s->max_gamma, std::abs(row.gamma[i]));
        }
    }
    for (const auto& s : out.stats) {
        out.thresholds.j_ds.emplace_back(s.mode_id,
                                         std::max(margin * s.max_rc, floor_jds));
        out.thresholds.j_is.emplace_back(s.mode_id,
                                         std::max(margin * s.max_gamma, floor_jis));
    }
    return out;
}

void write_plotdata(const SimLog& log, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int nv = log.meta.n_vehicles;
    auto write_series = [&](const std::string& name, auto getter) {
        std::ofstream f(fs::path(dir) / name);
        f << "t";
        for (int i = 0; i < nv; ++i) f << ",veh_" << i;
        f << "\n";
        for (const auto& r : log.rows) {
            f << format_double(r.t);
            for (int i = 0; i < nv; ++i) f << ',' << format_double(getter(r, i));
            f << '\n';
        }
    };
    write_series("velocity.csv", [](const LogRow& r, int i) { return r.v[i]; });
    write_series("position.csv", [](const LogRow& r, int i) { return r.pos[i]; });
    write_series("rc.csv", [](const LogRow& r, int i) { return r.rc[i]; });
    write_series("gamma.csv", [](const LogRow& r, int i) { return r.gamma[i]; });
}

} // namespace cacc
