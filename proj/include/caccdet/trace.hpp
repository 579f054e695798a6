#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cacc {

/// Leader drive-cycle velocity trace.
struct TraceSeries {
    std::vector<double> t;     // strictly increasing [s]
    std::vector<double> v;     // >= 0 [m/s]
    double native_dt = 0.0;    // 0 when non-uniform
    std::string label;

    double duration() const { return t.empty() ? 0.0 : t.back(); }
    /// Linear interpolation, clamped to the endpoints.
    double value_at(double time) const;
};

class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SpeedUnit { MetersPerSecond, MilesPerHour };

constexpr double kMphToMps = 0.44704;

/// Loads a two-column CSV (time_s, speed), optional single header line.
/// Rejects non-monotone time, negative speed and gaps larger than 1 s,
/// naming the offending row.
TraceSeries load_trace(const std::string& path,
                       SpeedUnit unit = SpeedUnit::MetersPerSecond);

/// Parses CSV text (same validation as load_trace); label names the source.
TraceSeries parse_trace(const std::string& text, SpeedUnit unit,
                        const std::string& label);

/// Linear resample onto the uniform dt grid over [0, last t]. The final
/// sample is preserved exactly even when last t is off-grid.
TraceSeries resample(const TraceSeries& trace, double dt);

enum class CycleKind { Highway, Urban };

/// Synthetic drive cycles for tests and default scenarios: highway keeps a
/// free-flow envelope (mean ~28 m/s, never below 15); urban produces
/// stop-and-go ramps with dwells at zero. Deterministic per seed.
TraceSeries synthetic_cycle(CycleKind kind, double duration, std::uint64_t seed);

} // namespace cacc
