#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hytrain/route.hpp"

using namespace hytrain;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("route: csv load, validation, and round trip") {
  const std::string csv =
      "position_m,elevation_m,speed_limit_mps,dwell_s\n"
      "0,10,20,0\n"
      "500,12.5,20,30\n"
      "1000,10,15,0\n";
  fs::path p = write_temp("route_ok.csv", csv);
  auto pts = load_route(p);
  REQUIRE(pts.size() == 3);
  CHECK(pts[1].position_m == 500.0);
  CHECK(pts[1].dwell_s == 30.0);
  CHECK(intermediate_stop_count(pts) == 1);

  auto again = load_route(write_temp("route_rt.csv", route_to_csv(pts)));
  REQUIRE(again.size() == 3);
  CHECK(again[2].speed_limit_mps == 15.0);

  SUBCASE("bad header") {
    fs::path bad = write_temp("route_h.csv", "pos,elev,lim,dwell\n0,0,1,0\n1,0,1,0\n");
    CHECK_THROWS_WITH_AS(load_route(bad), doctest::Contains("line 1"), std::runtime_error);
  }
  SUBCASE("non-monotone positions") {
    fs::path bad = write_temp(
        "route_m.csv", "position_m,elevation_m,speed_limit_mps,dwell_s\n0,0,1,0\n5,0,1,0\n5,0,1,0\n");
    CHECK_THROWS_WITH_AS(load_route(bad), doctest::Contains("line 4"), std::runtime_error);
  }
  SUBCASE("negative dwell") {
    fs::path bad = write_temp(
        "route_d.csv", "position_m,elevation_m,speed_limit_mps,dwell_s\n0,0,1,0\n5,0,1,-1\n");
    CHECK_THROWS_WITH_AS(load_route(bad), doctest::Contains("dwell"), std::runtime_error);
  }
  SUBCASE("zero speed limit") {
    fs::path bad = write_temp(
        "route_v.csv", "position_m,elevation_m,speed_limit_mps,dwell_s\n0,0,0,0\n5,0,1,0\n");
    CHECK_THROWS_AS(load_route(bad), std::runtime_error);
  }
}

TEST_CASE("route: resampling geometry") {
  std::vector<RoutePoint> pts(3);
  pts[0] = {0.0, 0.0, 20.0, 0.0};
  pts[1] = {50.0, 2.5, 10.0, 0.0};
  pts[2] = {100.0, 5.0, 10.0, 0.0};

  RouteProfile prof = resample(pts, 30.0, 0.1);
  REQUIRE(prof.size() == 4);  // 30 + 30 + 30 + 10
  CHECK(prof.intervals[0].delta_s == 30.0);
  CHECK(prof.intervals[3].delta_s == doctest::Approx(10.0));
  CHECK(prof.total_track_length == 100.0);

  // Uniform 5% climb: grade angle asin(0.05) everywhere.
  for (const auto& iv : prof.intervals)
    CHECK(iv.grade_angle == doctest::Approx(std::asin(0.05)).epsilon(1e-12));

  // Interval [30, 60) overlaps both the 20 m/s and the 10 m/s stretch.
  CHECK(prof.intervals[0].v_max == 20.0);
  CHECK(prof.intervals[1].v_max == 10.0);
  CHECK(prof.intervals[2].v_max == 10.0);
  for (const auto& iv : prof.intervals) CHECK(iv.v_min == 0.1);
}

TEST_CASE("route: dwell interval insertion") {
  std::vector<RoutePoint> pts(3);
  pts[0] = {0.0, 0.0, 20.0, 0.0};
  pts[1] = {60.0, 0.0, 20.0, 45.0};
  pts[2] = {120.0, 0.0, 20.0, 30.0};  // terminal station

  RouteProfile prof = build_profile(pts, 30.0, 0.1);
  // 4 track intervals + 2 dwell intervals.
  REQUIRE(prof.size() == 6);
  CHECK(prof.dwell_count() == 2);
  CHECK(prof.dwell_total_s() == 75.0);

  // Station at 60 m sits between track intervals [30,60) and [60,90).
  CHECK(!prof.intervals[1].is_dwell);
  CHECK(prof.intervals[2].is_dwell);
  CHECK(prof.intervals[2].delta_s == doctest::Approx(4.5));  // 45 s * 0.1 m/s
  CHECK(prof.intervals[2].v_max == 0.1);
  CHECK(prof.intervals[2].v_min == 0.1);
  CHECK(prof.intervals[2].grade_angle == 0.0);
  CHECK(prof.intervals[3].track_start == 60.0);

  // Terminal dwell lands at the very end.
  CHECK(prof.intervals[5].is_dwell);
  CHECK(prof.intervals[5].delta_s == doctest::Approx(3.0));

  // Dwell does not advance the track coordinate.
  double track_sum = 0.0;
  for (const auto& iv : prof.intervals)
    if (!iv.is_dwell) track_sum += iv.delta_s;
  CHECK(track_sum == doctest::Approx(120.0));
}

TEST_CASE("route: benchmark route shape") {
  auto pts = make_benchmark_route();
  REQUIRE(pts.size() == 64);
  CHECK(pts.back().position_m == 63000.0);
  CHECK(intermediate_stop_count(pts) == 16);
  CHECK(pts.back().dwell_s == 30.0);

  // Grades stay within physical rail territory (< 3%).
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    double g = (pts[k + 1].elevation_m - pts[k].elevation_m) / 1000.0;
    CHECK(std::abs(g) < 0.03);
  }

  RouteProfile prof = build_profile(pts, 10.0, 0.1);
  CHECK(prof.size() == 6300 + 17);
  CHECK(prof.dwell_total_s() == 17 * 30.0);

  // The slow stretches show up in the resampled limits.
  bool saw18 = false, saw20 = false;
  for (const auto& iv : prof.intervals) {
    if (iv.is_dwell) continue;
    if (iv.v_max == 18.0) saw18 = true;
    if (iv.v_max == 20.0) saw20 = true;
    CHECK(iv.v_max <= 25.0);
    CHECK(iv.v_max >= 10.0);
  }
  CHECK(saw18);
  CHECK(saw20);
}
