// Scratch probe: fits surrogates from the generated fixtures, builds tiny and
// benchmark-scale programs, and times build + solve. Not part of the build.
#include <chrono>
#include <cstdio>

#include "hytrain/maps.hpp"
#include "hytrain/program_builder.hpp"
#include "hytrain/route.hpp"
#include "hytrain/socp_solver.hpp"
#include "hytrain/surrogate.hpp"
#include "hytrain/trajectory.hpp"
#include "hytrain/train_params.hpp"

using namespace hytrain;
using Clock = std::chrono::steady_clock;

static double secs(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main() {
  TrainParameters params;
  ScenarioConfig scenario;

  auto motor_map = MotorEfficiencyMap::load("data/motor_eff.csv");
  auto fc_curve = FuelCellCurve::load("data/fuelcell_eff.csv");

  SurrogateSet s;
  s.motor = fit_motor_surrogate(motor_map, params.motor_force_min_n, params.motor_force_max_n,
                                motor_map.speed_min(), motor_map.speed_max());
  s.fuelcell = fit_fuelcell_surrogate(fc_curve, params.fc_power_min_w, params.fc_power_max_w,
                                      motor_map.speed_min(), motor_map.speed_max());
  s.soc = fit_battery_surrogate(params.batt_resistance_ohm, params.batt_open_circuit_v,
                                params.capacity_ah(), params.batt_power_min_w,
                                params.batt_power_max_w);

  std::printf("motor fit: rms=%.4f p=[%g %g %g %g %g]\n", s.motor.fit_rms, s.motor.p00,
              s.motor.p10, s.motor.p01, s.motor.p20, s.motor.p02);
  auto cm = certify_convexity(s.motor);
  std::printf("motor convex=%d min_eig=%g\n", cm.convex ? 1 : 0, cm.min_eigenvalue);
  std::printf("fc fit: rms=%.4f p=[%g %g %g %g %g]\n", s.fuelcell.fit_rms, s.fuelcell.p00,
              s.fuelcell.p10, s.fuelcell.p01, s.fuelcell.p20, s.fuelcell.p02);
  auto cf = certify_convexity(s.fuelcell);
  std::printf("fc convex=%d min_eig=%g\n", cf.convex ? 1 : 0, cf.min_eigenvalue);
  std::printf("soc fit: rms=%.6f alpha=%g beta=%g p_valid_max=%g\n", s.soc.fit_rms, s.soc.alpha,
              s.soc.beta, s.soc.p_valid_max);

  // Tiny: one interval, pinned crawl.
  {
    RouteProfile r;
    r.v_stop = 0.1;
    r.total_track_length = 10;
    RouteInterval iv;
    iv.delta_s = 10;
    iv.v_min = 0.1;
    iv.v_max = 25;
    r.intervals.push_back(iv);
    ScenarioConfig sc = scenario;
    sc.tau_s = 120;
    auto built = build_concurrent(r, params, sc, s);
    std::printf("\nN=1: cols=%d rows=%d\n", built.program.num_vars(), built.program.num_rows());
    SolverOptions so;
    auto sol = solve_program(built.program, so);
    std::printf("N=1 solve: status=%s iters=%d obj=%g\n", to_string(sol.status),
                sol.info.iterations, sol.objective);
    if (is_optimal(sol.status)) {
      auto tr = extract_trajectory(built, r, s, sol);
      std::printf("N=1: v=%g lam_v=%g f_m=%g f_brk=%g f_fc=%g f_batt=%g T=%g fuel=%g time=%g\n",
                  tr.v[0], tr.lambda_v[0], tr.f_motor[0], tr.f_brake[0], tr.f_fc[0], tr.f_batt[0],
                  tr.t_batt[0], tr.fuel_j, tr.journey_time_s);
    }
  }

  // Small: two 500 m stretches, one mid station plus terminal stop.
  {
    std::vector<RoutePoint> pts(3);
    pts[0] = {0, 0, 18, 0};
    pts[1] = {500, 0, 18, 30};
    pts[2] = {1000, 0, 18, 30};
    auto r = build_profile(pts, 10, 0.1);
    ScenarioConfig sc = scenario;
    sc.tau_s = 240;
    auto built = build_concurrent(r, params, sc, s);
    std::printf("\nsmall: n=%zu cols=%d rows=%d\n", r.intervals.size(),
                built.program.num_vars(), built.program.num_rows());
    auto sol = solve_program(built.program, SolverOptions{});
    std::printf("small solve: status=%s iters=%d obj=%g\n", to_string(sol.status),
                sol.info.iterations, sol.objective);
    if (is_optimal(sol.status)) {
      auto tr = extract_trajectory(built, r, s, sol);
      int n = tr.n;
      for (int i : {0, 1, 2, 30, 49, 50, 51, 52, 90, 99, 100, 101}) {
        if (i >= n) continue;
        std::printf("  i=%d dw=%d v=%.3f z=%.3f lam=%.4f fm=%.0f fb=%.0f ffc=%.0f fbat=%.0f "
                    "fdis=%.0f fchr=%.0f T=%.3f\n",
                    i, int(tr.is_dwell[i]), tr.v[i], tr.z[i], tr.lambda_v[i], tr.f_motor[i],
                    tr.f_brake[i], tr.f_fc[i], tr.f_batt[i], tr.f_dis[i], tr.f_chr[i],
                    tr.t_batt[i]);
      }
      std::printf("  time=%.2f fuel=%.1f zeta_end=%.5f T_end=%.3f\n", tr.journey_time_s,
                  tr.fuel_j, tr.zeta[n - 1], tr.t_batt[n - 1]);
    }
  }

  // Benchmark scale.
  {
    auto pts = make_benchmark_route();
    auto prof = build_profile(pts, scenario.delta_s_m, scenario.v_stop_mps);
    std::printf("\nbenchmark: intervals=%zu dwell=%zu\n", prof.intervals.size(),
                prof.dwell_count());
    auto t0 = Clock::now();
    auto built = build_concurrent(prof, params, scenario, s);
    auto t1 = Clock::now();
    std::printf("build: %.2fs cols=%d rows=%d\n", secs(t0, t1), built.program.num_vars(),
                built.program.num_rows());
    SolverOptions so;
    so.verbose = true;
    auto sol = solve_program(built.program, so);
    auto t2 = Clock::now();
    std::printf("solve: %.1fs status=%s iters=%d obj=%.6g msg=%s\n", secs(t1, t2),
                to_string(sol.status), sol.info.iterations, sol.objective,
                sol.info.message.c_str());
    if (is_optimal(sol.status)) {
      auto tr = extract_trajectory(built, prof, s, sol);
      double vmax = 0, tmax = -1e9;
      for (int i = 0; i < tr.n; ++i) {
        vmax = std::max(vmax, tr.v[i]);
        tmax = std::max(tmax, tr.t_batt[i]);
      }
      std::printf("traj: time=%.1f fuel=%.4g MJ zeta_end=%.4f T_max=%.2f v_max=%.2f\n",
                  tr.journey_time_s, tr.fuel_j / 1e6, tr.zeta[tr.n - 1], tmax, vmax);
    }
  }
  return 0;
}
