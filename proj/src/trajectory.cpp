#include "hytrain/trajectory.hpp"

#include <sstream>
#include <stdexcept>
#include <string>

#include "hytrain/io_util.hpp"

namespace hytrain {

TrajectoryResult extract_trajectory(const BuiltProgram& built, const RouteProfile& route,
                                    const SurrogateSet& surrogates, const ProgramSolution& sol) {
  const ProgramLayout& lay = built.layout;
  if (!is_optimal(sol.status))
    throw std::runtime_error(std::string("cannot extract a trajectory from a solve with status ") +
                             to_string(sol.status));
  if (static_cast<int>(route.intervals.size()) != lay.n)
    throw std::invalid_argument("route does not match the program layout");
  if (sol.x.size() != static_cast<Eigen::Index>(lay.n) * lay.stride)
    throw std::invalid_argument("solution vector does not match the program layout");

  TrajectoryResult tr;
  tr.n = lay.n;
  tr.z0 = built.v_stop * built.v_stop;
  tr.zeta0 = built.zeta0;
  tr.t_batt0_c = built.t_batt0_c;
  tr.objective_j = sol.objective;

  auto grab = [&](Col c, std::vector<double>& out) {
    out.resize(lay.n);
    for (int i = 0; i < lay.n; ++i) out[i] = sol.x[lay.col(i, c)];
  };

  tr.delta_s = built.delta_s;
  tr.track_start.resize(lay.n);
  tr.is_dwell.resize(lay.n);
  for (int i = 0; i < lay.n; ++i) {
    tr.track_start[i] = route.intervals[i].track_start;
    tr.is_dwell[i] = route.intervals[i].is_dwell ? 1 : 0;
  }

  grab(Col::kZNext, tr.z);
  grab(Col::kV, tr.v);
  grab(Col::kLambdaV, tr.lambda_v);
  grab(Col::kFMotor, tr.f_motor);
  grab(Col::kFBrake, tr.f_brake);
  grab(Col::kFFc, tr.f_fc);
  grab(Col::kFBatt, tr.f_batt);
  grab(Col::kZetaNext, tr.zeta);
  grab(Col::kDeltaZeta, tr.delta_zeta);
  grab(Col::kLambdaZeta, tr.lambda_zeta);
  for (int i = 0; i < lay.n; ++i) {
    tr.zeta[i] /= built.soc_scale;
    tr.delta_zeta[i] /= built.soc_scale;
    tr.lambda_zeta[i] /= built.soc_scale;
  }
  if (lay.thermal) {
    grab(Col::kTNext, tr.t_batt);
    grab(Col::kDeltaT, tr.delta_t);
    grab(Col::kFDis, tr.f_dis);
    grab(Col::kFChr, tr.f_chr);
    grab(Col::kQCool, tr.q_cool);
    for (int i = 0; i < lay.n; ++i) {
      tr.t_batt[i] /= built.temp_scale;
      tr.delta_t[i] /= built.temp_scale;
    }
  }

  tr.p_fc_w.resize(lay.n);
  tr.p_batt_w.resize(lay.n);
  tr.p_motor_w.resize(lay.n);
  tr.cooling_w.assign(lay.n, 0.0);
  tr.fuel_j = 0;
  tr.journey_time_s = 0;
  for (int i = 0; i < lay.n; ++i) {
    const double vi = tr.v[i];
    const double z_entry = i == 0 ? tr.z0 : tr.z[i - 1];
    tr.p_fc_w[i] = tr.f_fc[i] * vi;
    tr.p_batt_w[i] = tr.f_batt[i] * vi;
    tr.p_motor_w[i] = surrogates.motor.eval(tr.f_motor[i], z_entry) * vi;
    if (lay.thermal) tr.cooling_w[i] = tr.q_cool[i] * vi;
    tr.fuel_j += tr.delta_s[i] * surrogates.fuelcell.eval(tr.f_fc[i], z_entry);
    tr.journey_time_s += tr.delta_s[i] * tr.lambda_v[i];
  }
  return tr;
}

std::string TrajectoryResult::to_csv() const {
  std::ostringstream os;
  os << "index,track_start_m,delta_s_m,is_dwell,v_mps,z_next_m2s2,lambda_v_spm,"
        "f_motor_n,f_brake_n,f_fc_n,f_batt_n,zeta,delta_zeta,"
        "t_batt_c,delta_t_k,f_dis_n,f_chr_n,q_cool_jpm,"
        "p_fc_w,p_batt_w,p_motor_w,cooling_w\n";
  for (int i = 0; i < n; ++i) {
    os << i << ',' << format_sig12(track_start[i]) << ',' << format_sig12(delta_s[i]) << ','
       << int(is_dwell[i]) << ',' << format_sig12(v[i]) << ',' << format_sig12(z[i]) << ','
       << format_sig12(lambda_v[i]) << ',' << format_sig12(f_motor[i]) << ','
       << format_sig12(f_brake[i]) << ',' << format_sig12(f_fc[i]) << ','
       << format_sig12(f_batt[i]) << ',' << format_sig12(zeta[i]) << ','
       << format_sig12(delta_zeta[i]) << ',';
    if (has_thermal()) {
      os << format_sig12(t_batt[i]) << ',' << format_sig12(delta_t[i]) << ','
         << format_sig12(f_dis[i]) << ',' << format_sig12(f_chr[i]) << ','
         << format_sig12(q_cool[i]) << ',';
    } else {
      os << ",,,,,";
    }
    os << format_sig12(p_fc_w[i]) << ',' << format_sig12(p_batt_w[i]) << ','
       << format_sig12(p_motor_w[i]) << ',' << format_sig12(cooling_w[i]) << '\n';
  }
  return os.str();
}

}  // namespace hytrain
