// Compares serial and OpenMP execution of the step kernels over growing
// platoon sizes. The bundled scenarios use 11 followers where threading
// overhead dominates; the crossover shows up from a few hundred vehicles.
#include "caccdet/engine.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>

using namespace cacc;

namespace {

ScenarioConfig bench_config(int n_followers, double duration) {
    ScenarioConfig c;
    c.name = "bench";
    c.n_followers = n_followers;
    c.duration = duration;
    c.seed = 7;
    c.road.length = std::max(600.0, n_followers * 30.0);

    ModeParams hw;
    hw.mode_id = 1;
    hw.name = "highway";
    hw.k1 = 0.2; hw.k2 = 1.5; hw.k3 = 2.0;
    hw.time_headway = 0.5;
    c.modes.push_back(hw);

    ObserverGains g;
    g.mode_id = 1;
    g.L << 0.7116, -0.1377, -0.1377, 0.2284, 0.0990, -0.0894, 0.0983, -0.0998;
    g.M = 0.1 * g.L;
    c.gains.push_back(g);

    c.thresholds.j_ds.emplace_back(1, 4.0);
    c.thresholds.j_is.emplace_back(1, 6.0);
    c.schedule.entries.emplace_back(0.0, 1);

    TraceSeries tr;
    for (double t = 0.0; t <= duration + 2.0; t += 1.0) {
        tr.t.push_back(t);
        tr.v.push_back(25.0 + 2.0 * std::sin(0.1 * t));
    }
    tr.native_dt = 1.0;
    c.trace = tr;
    c.isolators_always_on = true; // exercise both observer banks
    return c;
}

double time_run(const ScenarioConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r = run_scenario(cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (r.diverged) std::printf("  (diverged!)\n");
    return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

int main() {
    std::printf("threads available: %d\n", omp_get_max_threads());
    std::printf("%8s %10s %12s %12s %8s\n", "n", "steps", "serial [s]",
                "openmp [s]", "speedup");
    for (int n : {11, 50, 200, 1000, 4000}) {
        const double duration = n <= 200 ? 60.0 : 20.0;
        ScenarioConfig cfg = bench_config(n, duration);
        cfg.execution = ExecutionPolicy::Serial;
        const double ts = time_run(cfg);
        cfg.execution = ExecutionPolicy::Parallel;
        const double tp = time_run(cfg);
        std::printf("%8d %10.0f %12.4f %12.4f %8.2f\n", n, duration / cfg.dt, ts,
                    tp, ts / tp);
    }
    return 0;
}
