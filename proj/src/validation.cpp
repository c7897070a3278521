#include "hytrain/validation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace hytrain {

namespace {

// Accumulates one family. den_floor keeps intervals with a vanishing local
// scale from reporting huge ratios; it is set to 1e-3 of the largest local
// scale seen over the journey, so a slack counts as loose only relative to
// magnitudes the family actually reaches.
struct FamilyAccum {
  std::vector<double> slack;
  std::vector<double> den;
  std::vector<char> tight_mask;

  void add(double s, double d, bool claim_tight) {
    slack.push_back(s);
    den.push_back(std::abs(d));
    tight_mask.push_back(claim_tight ? 1 : 0);
  }

  FamilySlack finish(std::string name, double tol) const {
    FamilySlack f;
    f.name = std::move(name);
    double den_max = 0;
    for (double d : den) den_max = std::max(den_max, d);
    const double den_floor = std::max(1e-3 * den_max, 1e-30);
    for (size_t i = 0; i < slack.size(); ++i) {
      const double rel = slack[i] / std::max(den[i], den_floor);
      f.min_slack = std::min(f.min_slack, rel);
      ++f.checked;
      if (!tight_mask[i]) continue;
      ++f.applicable;
      f.max_rel_slack = std::max(f.max_rel_slack, rel);
      if (rel > tol) ++f.over_tol;
    }
    return f;
  }
};

}  // namespace

TightnessReport check_tightness(const TrajectoryResult& result, const BuiltProgram& built,
                                const SurrogateSet& surrogates, const TrainParameters& params,
                                double tol) {
  const ProgramLayout& lay = built.layout;
  if (result.n != lay.n) throw std::invalid_argument("check_tightness: trajectory/layout mismatch");

  TightnessReport rep;
  rep.tol = tol;
  const auto& qm = surrogates.motor;
  const double alpha = surrogates.soc.alpha;
  const bool thermal = result.has_thermal();
  const double temp_cap = params.temp_max_c;
  const double act_margin = tol * std::max(1.0, temp_cap);

  FamilyAccum fa, fb, fc, fd, fe, ff;
  for (int i = 0; i < result.n; ++i) {
    const double ds = result.delta_s[i];
    const double v = result.v[i];
    const double lv = result.lambda_v[i];
    const double z_entry = i == 0 ? result.z0 : result.z[i - 1];
    const double z_anchor = lay.exit_anchored[i] ? result.z[i] : z_entry;

    fa.add(v * lv - 1.0, 1.0, true);
    fb.add(z_anchor - v * v, z_anchor, true);

    const double cool_draw = thermal ? result.q_cool[i] / params.cooling_cop : 0.0;
    const double demand =
        qm.eval(result.f_motor[i], z_entry) + params.aux_power_w * lv + cool_draw;
    fc.add(result.f_fc[i] + result.f_batt[i] - demand, demand, true);

    const double fbt = result.f_batt[i];
    fd.add(result.lambda_zeta[i] * lv - alpha * ds * fbt * fbt,
           result.lambda_zeta[i] * lv, true);

    if (thermal) {
      const bool temp_active = result.t_batt[i] >= temp_cap - act_margin;
      if (fbt < 0) fe.add(fbt - result.f_chr[i], fbt, temp_active);
      if (fbt > 0) ff.add(result.f_dis[i] - fbt, fbt, temp_active);
    }
  }

  rep.reciprocal_speed = fa.finish("reciprocal_speed", tol);
  rep.kinetic_envelope = fb.finish("kinetic_envelope", tol);
  rep.power_balance = fc.finish("power_balance", tol);
  rep.soc_rate = fd.finish("soc_rate", tol);
  rep.charge_split = fe.finish("charge_split", tol);
  rep.discharge_split = ff.finish("discharge_split", tol);
  return rep;
}

std::vector<const FamilySlack*> TightnessReport::families() const {
  return {&reciprocal_speed, &kinetic_envelope, &power_balance,
          &soc_rate,         &charge_split,     &discharge_split};
}

bool TightnessReport::all_tight() const {
  for (const auto* f : families())
    if (f->over_tol > 0) return false;
  return true;
}

bool TightnessReport::none_violated() const {
  for (const auto* f : families())
    if (f->min_slack < -tol) return false;
  return true;
}

std::string TightnessReport::to_json() const {
  nlohmann::json j;
  j["tol"] = tol;
  j["all_tight"] = all_tight();
  j["none_violated"] = none_violated();
  for (const auto* f : families()) {
    nlohmann::json e;
    e["max_rel_slack"] = f->max_rel_slack;
    e["min_slack"] = f->min_slack;
    e["over_tol"] = f->over_tol;
    e["applicable"] = f->applicable;
    e["checked"] = f->checked;
    j["families"][f->name] = e;
  }
  return j.dump(2);
}

namespace {

MethodOutcome run_method(std::string method, BuiltProgram& built, const RouteProfile& route,
                         const TrainParameters& params, const ScenarioConfig& scenario,
                         const SurrogateSet& surrogates, const MotorEfficiencyMap& motor_map,
                         const FuelCellCurve& fc_curve, const SolverOptions& solver_options,
                         SimOptions sim_options, bool thermostat) {
  MethodOutcome out;
  out.method = std::move(method);

  ProgramSolution sol = solve_program(built.program, solver_options);
  out.status = sol.status;
  out.iterations = sol.info.iterations;
  out.solve_seconds = sol.info.solve_seconds;
  out.solver_optimal = sol.status == SolveStatus::Optimal;
  if (!is_optimal(sol.status))
    throw std::runtime_error("compare_methods: " + out.method +
                             " solve failed: " + sol.info.message);
  out.objective_j = sol.objective;

  TrajectoryResult traj = extract_trajectory(built, route, surrogates, sol);
  out.planned_fuel_j = traj.fuel_j;
  out.planned_peak_t_c = traj.t_batt0_c;
  for (double tc : traj.t_batt) out.planned_peak_t_c = std::max(out.planned_peak_t_c, tc);

  sim_options.thermostat = thermostat;
  SimTrace trace = simulate_forward(traj, params, route, scenario, motor_map, fc_curve, sim_options);
  out.sim_fuel_j = trace.fuel_total_j;
  out.sim_cooling_elec_j = trace.cooling_elec_total_j;
  out.sim_peak_t_c = trace.peak_t_batt_c;
  out.sim_journey_time_s = trace.journey_time_s;
  out.sim_v_end = trace.v_end;
  out.sim_zeta_end = trace.zeta_end;
  out.sim_t_end_c = trace.t_batt_end_c;
  out.sim_dump_j = trace.dump_j;

  out.temp_within_bound = trace.peak_t_batt_c <= params.temp_max_c + 0.5;
  out.soc_within_band = trace.zeta_min >= params.soc_min - 0.005 &&
                        trace.zeta_max <= params.soc_max + 0.005;
  double p_fc_peak = 0;
  for (double p : trace.p_fc_w) p_fc_peak = std::max(p_fc_peak, p);
  out.fc_within_limits = p_fc_peak <= params.fc_power_max_w + 1.0;
  return out;
}

void outcome_to_json(nlohmann::json& j, const MethodOutcome& m) {
  j["status"] = to_string(m.status);
  j["iterations"] = m.iterations;
  j["solve_seconds"] = m.solve_seconds;
  j["objective_j"] = m.objective_j;
  j["planned_fuel_j"] = m.planned_fuel_j;
  j["planned_peak_t_c"] = m.planned_peak_t_c;
  j["sim_fuel_j"] = m.sim_fuel_j;
  j["sim_cooling_elec_j"] = m.sim_cooling_elec_j;
  j["sim_peak_t_c"] = m.sim_peak_t_c;
  j["sim_journey_time_s"] = m.sim_journey_time_s;
  j["sim_v_end_mps"] = m.sim_v_end;
  j["sim_zeta_end"] = m.sim_zeta_end;
  j["sim_t_end_c"] = m.sim_t_end_c;
  j["sim_dump_j"] = m.sim_dump_j;
  j["flags"]["solver_optimal"] = m.solver_optimal;
  j["flags"]["temp_within_bound"] = m.temp_within_bound;
  j["flags"]["soc_within_band"] = m.soc_within_band;
  j["flags"]["fc_within_limits"] = m.fc_within_limits;
}

}  // namespace

ComparisonReport compare_methods(const RouteProfile& route, const TrainParameters& params,
                                 const ScenarioConfig& scenario, const SurrogateSet& surrogates,
                                 const MotorEfficiencyMap& motor_map, const FuelCellCurve& fc_curve,
                                 const SolverOptions& solver_options,
                                 const SimOptions& sim_options) {
  ComparisonReport rep;
  rep.t_amb_c = scenario.t_amb_c;
  rep.t_batt0_c = scenario.t_batt0_c;
  rep.tau_s = scenario.tau_s;
  rep.cooling_note =
      "sequential cooling: thermostat draw served by the fuel cell at curve "
      "efficiency; battery dispatch frozen to the plan";

  BuiltProgram conc = build_concurrent(route, params, scenario, surrogates);
  rep.concurrent = run_method("concurrent", conc, route, params, scenario, surrogates, motor_map,
                              fc_curve, solver_options, sim_options, /*thermostat=*/false);

  BuiltProgram seq = build_sequential(route, params, scenario, surrogates);
  rep.sequential = run_method("sequential", seq, route, params, scenario, surrogates, motor_map,
                              fc_curve, solver_options, sim_options, /*thermostat=*/true);

  rep.saving = 1.0 - rep.concurrent.sim_fuel_j / rep.sequential.sim_fuel_j;
  return rep;
}

std::string ComparisonReport::to_json() const {
  nlohmann::json j;
  j["t_amb_c"] = t_amb_c;
  j["t_batt0_c"] = t_batt0_c;
  j["tau_s"] = tau_s;
  j["saving"] = saving;
  j["cooling_note"] = cooling_note;
  outcome_to_json(j["concurrent"], concurrent);
  outcome_to_json(j["sequential"], sequential);
  return j.dump(2);
}

}  // namespace hytrain
