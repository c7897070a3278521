#include "hytrain/route.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hytrain/io_util.hpp"

namespace hytrain {

double RouteProfile::dwell_total_s() const {
  double t = 0.0;
  for (const auto& iv : intervals)
    if (iv.is_dwell) t += iv.dwell_s;
  return t;
}

size_t RouteProfile::dwell_count() const {
  size_t n = 0;
  for (const auto& iv : intervals) n += iv.is_dwell ? 1 : 0;
  return n;
}

std::vector<RoutePoint> load_route(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open route file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty file");
  {
    auto fields = split_csv_line(line);
    const std::vector<std::string> expect = {"position_m", "elevation_m", "speed_limit_mps",
                                             "dwell_s"};
    if (std::vector<std::string>(fields.begin(), fields.end()) != expect)
      throw std::runtime_error(path.string() +
                               " line 1: header must be position_m,elevation_m,speed_limit_mps,dwell_s");
  }

  std::vector<RoutePoint> pts;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    const std::string ctx = path.string() + " line " + std::to_string(lineno);
    if (fields.size() != 4) throw std::runtime_error(ctx + ": expected 4 fields");
    RoutePoint p;
    p.position_m = parse_double(fields[0], ctx);
    p.elevation_m = parse_double(fields[1], ctx);
    p.speed_limit_mps = parse_double(fields[2], ctx);
    p.dwell_s = parse_double(fields[3], ctx);
    if (!pts.empty() && !(p.position_m > pts.back().position_m))
      throw std::runtime_error(ctx + ": positions must increase strictly");
    if (!(p.speed_limit_mps > 0.0))
      throw std::runtime_error(ctx + ": speed limit must be positive");
    if (p.dwell_s < 0.0) throw std::runtime_error(ctx + ": dwell must be nonnegative");
    pts.push_back(p);
  }
  if (pts.size() < 2) throw std::runtime_error(path.string() + ": need at least 2 points");
  if (pts.front().position_m != 0.0)
    throw std::runtime_error(path.string() + ": first point must be at position 0");
  return pts;
}

size_t intermediate_stop_count(const std::vector<RoutePoint>& points) {
  size_t n = 0;
  for (size_t k = 1; k + 1 < points.size(); ++k)
    if (points[k].dwell_s > 0.0) ++n;
  return n;
}

namespace {

double elevation_at(const std::vector<RoutePoint>& pts, double s) {
  if (s <= pts.front().position_m) return pts.front().elevation_m;
  if (s >= pts.back().position_m) return pts.back().elevation_m;
  auto it = std::upper_bound(pts.begin(), pts.end(), s, [](double v, const RoutePoint& p) {
    return v < p.position_m;
  });
  const RoutePoint& hi = *it;
  const RoutePoint& lo = *(it - 1);
  double w = (s - lo.position_m) / (hi.position_m - lo.position_m);
  return lo.elevation_m + w * (hi.elevation_m - lo.elevation_m);
}

// Minimum raw speed limit over [s0, s1). Raw limits are piecewise constant:
// the limit at point k holds on [pos_k, pos_{k+1}).
double min_limit_over(const std::vector<RoutePoint>& pts, double s0, double s1) {
  double lim = std::numeric_limits<double>::max();
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = pts[k].position_m, b = pts[k + 1].position_m;
    if (b <= s0 || a >= s1) continue;
    lim = std::min(lim, pts[k].speed_limit_mps);
  }
  return lim;
}

}  // namespace

RouteProfile resample(const std::vector<RoutePoint>& points, double delta_s, double v_stop) {
  if (!(delta_s > 0.0)) throw std::runtime_error("resample: delta_s must be positive");
  if (!(v_stop > 0.0)) throw std::runtime_error("resample: v_stop must be positive");
  RouteProfile prof;
  prof.v_stop = v_stop;
  prof.total_track_length = points.back().position_m;

  double s = 0.0;
  const double L = prof.total_track_length;
  while (s < L - 1e-9) {
    double len = std::min(delta_s, L - s);
    RouteInterval iv;
    iv.delta_s = len;
    iv.track_start = s;
    double de = elevation_at(points, s + len) - elevation_at(points, s);
    double ratio = std::clamp(de / len, -1.0, 1.0);
    iv.grade_angle = std::asin(ratio);
    iv.v_min = v_stop;
    iv.v_max = min_limit_over(points, s, s + len);
    prof.intervals.push_back(iv);
    s += len;
  }
  return prof;
}

void insert_dwell_intervals(RouteProfile& profile, const std::vector<RoutePoint>& points) {
  // Walk stations in position order; insertion indices stay valid because we
  // insert back to front.
  std::vector<const RoutePoint*> stations;
  for (const auto& p : points)
    if (p.dwell_s > 0.0) stations.push_back(&p);
  for (auto it = stations.rbegin(); it != stations.rend(); ++it) {
    const RoutePoint& st = **it;
    // Insert before the first track interval starting at or after the
    // station position (end() for a terminal station).
    auto pos = std::find_if(profile.intervals.begin(), profile.intervals.end(),
                            [&](const RouteInterval& iv) {
                              return !iv.is_dwell && iv.track_start >= st.position_m - 1e-9;
                            });
    RouteInterval dw;
    dw.is_dwell = true;
    dw.dwell_s = st.dwell_s;
    dw.delta_s = st.dwell_s * profile.v_stop;
    dw.grade_angle = 0.0;
    dw.v_min = profile.v_stop;
    dw.v_max = profile.v_stop;
    dw.track_start = std::min(st.position_m, profile.total_track_length);
    profile.intervals.insert(pos, dw);
  }
}

RouteProfile build_profile(const std::vector<RoutePoint>& points, double delta_s, double v_stop) {
  RouteProfile prof = resample(points, delta_s, v_stop);
  insert_dwell_intervals(prof, points);
  return prof;
}

std::vector<RoutePoint> make_benchmark_route() {
  // 64 points, 1 km apart, 63 km total. Elevation is a sum of three
  // incommensurate waves giving grades up to ~2.5%; limits are 25 m/s with
  // two slower stretches; 16 interior stations carry 30 s dwell and the
  // terminal is a station stop as well.
  const int n = 64;
  const double spacing = 1000.0;
  const int station_idx[16] = {4, 8, 12, 15, 19, 23, 27, 31, 34, 38, 42, 46, 49, 53, 57, 61};
  std::vector<RoutePoint> pts(n);
  for (int k = 0; k < n; ++k) {
    double x = k * spacing;
    RoutePoint& p = pts[k];
    p.position_m = x;
    p.elevation_m = 40.0 + 25.0 * std::sin(2.0 * M_PI * x / 21000.0) +
                    12.0 * std::sin(2.0 * M_PI * x / 8400.0 + 1.3) +
                    6.0 * std::sin(2.0 * M_PI * x / 3500.0 + 0.7);
    p.speed_limit_mps = 25.0;
    if (k >= 20 && k < 26) p.speed_limit_mps = 18.0;
    if (k >= 44 && k < 48) p.speed_limit_mps = 20.0;
    p.dwell_s = 0.0;
  }
  for (int idx : station_idx) pts[idx].dwell_s = 30.0;
  pts[n - 1].dwell_s = 30.0;  // terminal station
  return pts;
}

std::string route_to_csv(const std::vector<RoutePoint>& points) {
  std::ostringstream out;
  out << "position_m,elevation_m,speed_limit_mps,dwell_s\n";
  for (const auto& p : points)
    out << format_sig12(p.position_m) << ',' << format_sig12(p.elevation_m) << ','
        << format_sig12(p.speed_limit_mps) << ',' << format_sig12(p.dwell_s) << '\n';
  return out.str();
}

}  // namespace hytrain
