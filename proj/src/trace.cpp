#include "caccdet/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace cacc {

double TraceSeries::value_at(double time) const {
    if (t.empty()) throw IngestionError("empty trace");
    if (time <= t.front()) return v.front();
    if (time >= t.back()) return v.back();
    auto it = std::upper_bound(t.begin(), t.end(), time);
    std::size_t hi = static_cast<std::size_t>(it - t.begin());
    std::size_t lo = hi - 1;
    const double w = (time - t[lo]) / (t[hi] - t[lo]);
    return v[lo] + w * (v[hi] - v[lo]);
}

TraceSeries parse_trace(const std::string& text, SpeedUnit unit,
                        const std::string& label) {
    TraceSeries out;
    out.label = label;
    std::istringstream in(text);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double tt, vv;
        if (!(ls >> tt >> vv)) {
            if (row == 1) continue; // header line
            throw IngestionError(label + ": row " + std::to_string(row) +
                                 ": cannot parse (time, speed)");
        }
        if (unit == SpeedUnit::MilesPerHour) vv *= kMphToMps;
        if (!out.t.empty() && tt <= out.t.back())
            throw IngestionError(label + ": row " + std::to_string(row) +
                                 ": non-monotone time");
        if (vv < 0.0)
            throw IngestionError(label + ": row " + std::to_string(row) +
                                 ": negative velocity");
        if (!out.t.empty() && tt - out.t.back() > 1.0 + 1e-9)
            throw IngestionError(label + ": row " + std::to_string(row) +
                                 ": gap larger than 1 s");
        out.t.push_back(tt);
        out.v.push_back(vv);
    }
    if (out.t.size() < 2)
        throw IngestionError(label + ": needs at least two samples");
    // uniform grid detection
    double dt0 = out.t[1] - out.t[0];
    bool uniform = true;
    for (std::size_t i = 2; i < out.t.size(); ++i)
        if (std::abs(out.t[i] - out.t[i - 1] - dt0) > 1e-9) { uniform = false; break; }
    out.native_dt = uniform ? dt0 : 0.0;
    return out;
}

TraceSeries load_trace(const std::string& path, SpeedUnit unit) {
    std::ifstream f(path);
    if (!f) throw IngestionError("cannot open trace file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_trace(ss.str(), unit, path);
}

TraceSeries resample(const TraceSeries& trace, double dt) {
    if (dt <= 0.0) throw IngestionError("resample dt must be positive");
    TraceSeries out;
    out.label = trace.label;
    out.native_dt = dt;
    const double last = trace.t.back();
    const auto n = static_cast<std::size_t>(std::floor(last / dt + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) {
        const double tt = static_cast<double>(k) * dt;
        out.t.push_back(tt);
        out.v.push_back(trace.value_at(tt));
    }
    if (out.t.back() < last - 1e-9) { // keep the exact endpoint
        out.t.push_back(last);
        out.v.push_back(trace.v.back());
        out.native_dt = 0.0;
    }
    return out;
}

TraceSeries synthetic_cycle(CycleKind kind, double duration, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TraceSeries out;
    out.native_dt = 1.0;
    if (kind == CycleKind::Highway) {
        out.label = "synthetic-highway";
        // Ornstein-Uhlenbeck fluctuation about free-flow speed, reflected
        // off the 16 m/s floor so the min-speed envelope holds.
        std::normal_distribution<double> w(0.0, 0.6);
        const double mean = 28.0, theta = 0.08;
        double v = mean;
        for (double t = 0.0; t <= duration + 1e-9; t += 1.0) {
            out.t.push_back(t);
            out.v.push_back(v);
            double nv = v + theta * (mean - v) + w(rng);
            nv = std::clamp(nv, v - 2.0, v + 2.0); // accel envelope
            if (nv < 16.0) nv = 16.0 + (16.0 - nv);
            if (nv > 34.0) nv = 34.0;
            v = nv;
        }
    } else {
        out.label = "synthetic-urban";
        // repeated stop-go: dwell at 0, ramp up, cruise, ramp down
        std::uniform_real_distribution<double> peak(8.0, 15.0);
        std::uniform_real_distribution<double> dwell(4.0, 8.0);
        std::uniform_real_distribution<double> cruise(8.0, 16.0);
        std::vector<double> bt{0.0}, bv{0.0};
        double t = 0.0;
        while (t < duration) {
            const double d0 = dwell(rng);
            const double vp = peak(rng);
            const double cr = cruise(rng);
            t += d0; bt.push_back(t); bv.push_back(0.0);
            t += vp / 1.0; bt.push_back(t); bv.push_back(vp); // up at 1 m/s^2
            t += cr; bt.push_back(t); bv.push_back(vp);
            t += vp / 0.9; bt.push_back(t); bv.push_back(0.0); // down at 0.9
        }
        // 1 Hz samples over the breakpoints keep the gap invariant
        TraceSeries raw;
        raw.t = bt;
        raw.v = bv;
        for (double tt = 0.0; tt <= t + 1e-9; tt += 1.0) {
            out.t.push_back(tt);
            out.v.push_back(raw.value_at(tt));
        }
        out.native_dt = 1.0;
    }
    return out;
}

} // namespace cacc
