#pragma once

#include <string>
#include <vector>

#include "hytrain/program_builder.hpp"
#include "hytrain/route.hpp"
#include "hytrain/socp_solver.hpp"
#include "hytrain/surrogate.hpp"

namespace hytrain {

/// Per-interval series decoded from a solved program, plus physical power
/// signals derived from the decision variables (power = force * speed; forces
/// in the program are per-meter energies). Thermal series are empty when the
/// program was built without the temperature model.
struct TrajectoryResult {
  int n = 0;
  std::vector<double> delta_s;      // interval lengths [m]
  std::vector<double> track_start;  // spatial coordinate at interval start [m]
  std::vector<char> is_dwell;

  std::vector<double> z;            // exit kinetic state z_{i+1} [m^2/s^2]
  std::vector<double> v;            // interval speed [m/s]
  std::vector<double> lambda_v;     // travel time per meter [s/m]
  std::vector<double> f_motor;      // [N]
  std::vector<double> f_brake;      // [N]
  std::vector<double> f_fc;         // fuel-cell supply per meter [N]
  std::vector<double> f_batt;       // battery supply per meter [N]
  std::vector<double> zeta;         // exit SOC [fraction]
  std::vector<double> delta_zeta;
  std::vector<double> lambda_zeta;

  std::vector<double> t_batt;       // exit battery temperature [degC]
  std::vector<double> delta_t;      // [K]
  std::vector<double> f_dis, f_chr; // discharge/charge images of f_batt [N]
  std::vector<double> q_cool;       // active heat removal per meter [J/m]

  std::vector<double> p_fc_w;       // derived electric powers [W]
  std::vector<double> p_batt_w;
  std::vector<double> p_motor_w;    // motor electric draw via the surrogate
  std::vector<double> cooling_w;    // derived thermal removal rate [W]

  double z0 = 0;                    // boundary values the chains start from
  double zeta0 = 0;
  double t_batt0_c = 0;

  double fuel_j = 0;           // surrogate fuel re-evaluated from the series
  double objective_j = 0;      // solver objective echo
  double journey_time_s = 0;   // sum of delta_s * lambda_v

  bool has_thermal() const { return !t_batt.empty(); }

  /// One row per interval, 12-significant-digit fields, stable header.
  std::string to_csv() const;
};

/// Decodes a solved program into physical series. Throws if the solution
/// status is not optimal or the route does not match the program layout.
TrajectoryResult extract_trajectory(const BuiltProgram& built, const RouteProfile& route,
                                    const SurrogateSet& surrogates, const ProgramSolution& sol);

}  // namespace hytrain
