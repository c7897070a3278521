#include "hytrain/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hytrain/io_util.hpp"
#include "hytrain/program_builder.hpp"
#include "hytrain/surrogate.hpp"

namespace hytrain {

double thermostat_cooling(double t_batt_c, ThermostatState& state, const TrainParameters& params) {
  const double t_on = params.temp_max_c - 2.0;
  const double t_off = params.temp_max_c - 4.0;
  if (t_batt_c >= t_on) state.on = true;
  else if (t_batt_c <= t_off) state.on = false;
  return state.on ? params.cooling_power_max_w : 0.0;
}

namespace {

struct StepAccounting {
  double p_motor = 0, p_cool_elec = 0, p_fc = 0, dump = 0;
};

}  // namespace

SimTrace simulate_forward(const TrajectoryResult& result, const TrainParameters& params,
                          const RouteProfile& route, const ScenarioConfig& scenario,
                          const MotorEfficiencyMap& motor_map, const FuelCellCurve& fc_curve,
                          const SimOptions& options) {
  const int n = result.n;
  if (static_cast<int>(route.intervals.size()) != n)
    throw SimulationError("simulate_forward: route does not match the trajectory");
  if (options.dt_s <= 0 || options.dt_s > 1.0)
    throw SimulationError("simulate_forward: dt must be in (0, 1] s");

  const double m_eq = params.equivalent_mass();
  const double q_ah = params.capacity_ah();
  const double mcb = params.batt_mass_kg * params.batt_specific_heat;
  const double p_batt_valid =
      params.batt_open_circuit_v * params.batt_open_circuit_v / (4.0 * params.batt_resistance_ohm);
  const double v_floor = 1e-3;  // speed-collapse threshold between stations

  // Interval start positions in the program coordinate.
  std::vector<double> start(n + 1, 0.0);
  for (int i = 0; i < n; ++i) start[i + 1] = start[i] + result.delta_s[i];
  const double x_end = start[n];

  SimTrace tr;
  const size_t expect = static_cast<size_t>(result.journey_time_s / options.dt_s) + n + 2;
  for (auto* s : {&tr.time_s, &tr.position_m, &tr.v_mps, &tr.zeta, &tr.t_batt_c, &tr.p_fc_w,
                  &tr.p_batt_w, &tr.cooling_w, &tr.fuel_j, &tr.cooling_elec_j})
    s->reserve(expect);

  double t = 0;
  double x = 0;
  double v = std::sqrt(std::max(result.z0, 0.0));
  if (v <= 0) v = route.v_stop;
  double zeta = result.zeta0;
  double temp = result.t_batt0_c;
  double fuel = 0, cool_elec = 0;
  int k = 0;
  bool was_dwell = route.intervals[0].is_dwell;
  ThermostatState thermo;
  // Start inside the thermostat band with the cooler off.
  thermo.on = false;

  tr.peak_t_batt_c = temp;
  tr.zeta_min = tr.zeta_max = zeta;

  const double t_abort = options.max_time_factor * std::max(result.journey_time_s, scenario.tau_s);

  auto record = [&](double p_fc, double p_batt, double cool_rate) {
    tr.time_s.push_back(t);
    tr.position_m.push_back(x);
    tr.v_mps.push_back(v);
    tr.zeta.push_back(zeta);
    tr.t_batt_c.push_back(temp);
    tr.p_fc_w.push_back(p_fc);
    tr.p_batt_w.push_back(p_batt);
    tr.cooling_w.push_back(cool_rate);
    tr.fuel_j.push_back(fuel);
    tr.cooling_elec_j.push_back(cool_elec);
  };

  while (x < x_end) {
    if (t > t_abort)
      throw SimulationError("simulate_forward: journey not completed after " +
                            std::to_string(t_abort) + " s");
    // Advance the interval pointer; clamp speed when entering a dwell
    // stretch (the platform stop).
    while (k + 1 < n && x >= start[k + 1]) ++k;
    const RouteInterval& seg = route.intervals[k];
    if (seg.is_dwell && !was_dwell && v > route.v_stop) {
      tr.brake_clamp_j += 0.5 * m_eq * (v * v - route.v_stop * route.v_stop);
      v = route.v_stop;
    }
    was_dwell = seg.is_dwell;

    // Commands, zero-order hold by position.
    const double f_m = result.f_motor[k];
    const double f_brk = result.f_brake[k];
    const double p_batt = result.p_batt_w[k];
    double cool_rate;
    if (options.thermostat) {
      cool_rate = thermostat_cooling(temp, thermo, params);
    } else {
      cool_rate = result.has_thermal() ? result.cooling_w[k] : 0.0;
    }

    if (p_batt > p_batt_valid)
      throw SimulationError("simulate_forward: battery command " + std::to_string(p_batt) +
                            " W beyond the internal-resistance validity limit " +
                            std::to_string(p_batt_valid) + " W at t=" + std::to_string(t));

    // Exact power balance; the fuel cell serves the residual.
    const double p_motor = motor_map.electrical_power(f_m, v);
    const double p_cool_elec = cool_rate / params.cooling_cop;
    double p_fc = p_motor + params.aux_power_w + p_cool_elec - p_batt;
    double dump = 0;
    if (p_fc < 0) {
      dump = -p_fc;
      p_fc = 0;
    }

    record(p_fc, p_batt, cool_rate);

    // Final partial step lands exactly on the route end.
    double dt = options.dt_s;
    const double dx_full = v * dt;
    if (x + dx_full >= x_end && v > 0) dt = (x_end - x) / v;

    fuel += fc_curve.fuel_power(p_fc) * dt;
    cool_elec += p_cool_elec * dt;
    tr.motor_elec_j += p_motor * dt;
    tr.aux_j += params.aux_power_w * dt;
    tr.dump_j += dump * dt;
    if (p_batt >= 0) tr.batt_discharge_j += p_batt * dt;
    else tr.batt_charge_j += -p_batt * dt;

    // Exact dynamics, forward Euler.
    const double f_ext = external_force(v, v * v, seg.grade_angle, params, seg.is_dwell);
    const double dvdt = (f_m + f_brk - f_ext) / m_eq;
    const double dzeta_dt = -exact_soc_rate(p_batt, params.batt_resistance_ohm,
                                            params.batt_open_circuit_v, q_ah);
    const double q_gen = p_batt >= 0 ? p_batt * (1.0 - params.eta_discharge)
                                     : -p_batt * (1.0 - params.eta_charge);
    const double dtemp_dt =
        (q_gen - params.heat_transfer_w_per_k * (temp - scenario.t_amb_c) - cool_rate) / mcb;

    x += v * dt;
    v += dvdt * dt;
    zeta += dzeta_dt * dt;
    temp += dtemp_dt * dt;
    t += dt;

    if (v <= v_floor && !seg.is_dwell)
      throw SimulationError("simulate_forward: speed collapsed to " + std::to_string(v) +
                            " m/s at x=" + std::to_string(x) + " m (t=" + std::to_string(t) + " s)");
    if (seg.is_dwell) v = route.v_stop;  // holding brake

    tr.peak_t_batt_c = std::max(tr.peak_t_batt_c, temp);
    tr.zeta_min = std::min(tr.zeta_min, zeta);
    tr.zeta_max = std::max(tr.zeta_max, zeta);
  }

  record(tr.p_fc_w.empty() ? 0.0 : tr.p_fc_w.back(),
         tr.p_batt_w.empty() ? 0.0 : tr.p_batt_w.back(),
         tr.cooling_w.empty() ? 0.0 : tr.cooling_w.back());

  tr.journey_time_s = t;
  tr.fuel_total_j = fuel;
  tr.cooling_elec_total_j = cool_elec;
  tr.v_end = v;
  tr.zeta_end = zeta;
  tr.t_batt_end_c = temp;
  return tr;
}

std::string SimTrace::to_csv() const {
  std::ostringstream os;
  os << "time_s,position_m,v_mps,zeta,t_batt_c,p_fc_w,p_batt_w,cooling_w,fuel_j,cooling_elec_j\n";
  for (size_t i = 0; i < time_s.size(); ++i) {
    os << format_sig12(time_s[i]) << ',' << format_sig12(position_m[i]) << ',' << format_sig12(v_mps[i]) << ','
       << format_sig12(zeta[i]) << ',' << format_sig12(t_batt_c[i]) << ',' << format_sig12(p_fc_w[i]) << ','
       << format_sig12(p_batt_w[i]) << ',' << format_sig12(cooling_w[i]) << ',' << format_sig12(fuel_j[i]) << ','
       << format_sig12(cooling_elec_j[i]) << '\n';
  }
  return os.str();
}

}  // namespace hytrain
