#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hytrain {

/// One row of a route CSV. Positions are cumulative track meters; the speed
/// limit applies from this point until the next one; dwell_s > 0 marks a
/// station stop of that duration at this position.
struct RoutePoint {
  double position_m = 0.0;
  double elevation_m = 0.0;
  double speed_limit_mps = 0.0;
  double dwell_s = 0.0;
};

/// One spatial interval of the discretized profile. Dwell intervals emulate a
/// station stop: they are dwell_s * v_stop long, flat, and pin speed to
/// v_stop. They do not advance the track coordinate.
struct RouteInterval {
  double delta_s = 0.0;        // interval length in the program's spatial coordinate [m]
  double grade_angle = 0.0;    // arcsin((elev_end - elev_start) / delta_s) [rad], 0 on dwell
  double v_min = 0.0;          // [m/s]
  double v_max = 0.0;          // [m/s]
  bool is_dwell = false;
  double dwell_s = 0.0;        // stop duration, dwell intervals only [s]
  double track_start = 0.0;    // real track coordinate at interval start [m]
};

struct RouteProfile {
  std::vector<RouteInterval> intervals;
  double v_stop = 0.0;
  double total_track_length = 0.0;

  size_t size() const { return intervals.size(); }
  double dwell_total_s() const;
  size_t dwell_count() const;
};

/// Loads and validates a route CSV (header: position_m,elevation_m,
/// speed_limit_mps,dwell_s). Throws std::runtime_error with the offending
/// line number for malformed rows, non-monotone positions, non-positive
/// speed limits, or negative dwell.
std::vector<RoutePoint> load_route(const std::filesystem::path& path);

/// Counts interior points with dwell_s > 0 (terminal stops excluded).
size_t intermediate_stop_count(const std::vector<RoutePoint>& points);

/// Resamples a route onto a uniform spatial grid of length delta_s (the last
/// track interval takes the remainder if delta_s does not divide the total
/// length). Elevation is interpolated linearly; each interval's speed limit
/// is the minimum over the raw segments it overlaps; v_min is v_stop
/// everywhere. No dwell intervals are produced here.
RouteProfile resample(const std::vector<RoutePoint>& points, double delta_s, double v_stop);

/// Inserts one dwell interval per dwell-marked route point, in position
/// order: length dwell_s * v_stop, zero grade, v_min = v_max = v_stop.
/// Track coordinates of the surrounding intervals are unchanged.
void insert_dwell_intervals(RouteProfile& profile, const std::vector<RoutePoint>& points);

/// Convenience: resample + insert_dwell_intervals.
RouteProfile build_profile(const std::vector<RoutePoint>& points, double delta_s, double v_stop);

/// Synthetic 63 km benchmark route: 64 points at 1 km spacing, rolling
/// gradients up to ~2.5%, 16 intermediate stations with 30 s dwell, and a
/// terminal station stop.
std::vector<RoutePoint> make_benchmark_route();

/// Serializes points back to route CSV text (12 significant digits).
std::string route_to_csv(const std::vector<RoutePoint>& points);

}  // namespace hytrain
