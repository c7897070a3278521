#pragma once

#include <filesystem>
#include <string>

namespace hytrain {

constexpr double kGravity = 9.81;        // [m/s^2]
constexpr double kKelvinOffset = 273.15;

/// Vehicle, powertrain, battery, and thermal parameters. Strict SI units
/// internally (N, W, J, kg, m, s, K); SOC is a fraction in [0, 1].
struct TrainParameters {
  double mass_kg = 183000.0;
  double rotating_mass_factor = 0.0625;  // equivalent mass = mass*(1+factor)
  double davis_a_n = 1743.0;             // rolling term [N]
  double davis_b_kg_per_s = 76.4;        // linear speed term [kg/s]
  double davis_c_kg_per_m = 6.2;         // quadratic speed term [kg/m]

  double motor_force_min_n = -87000.0;
  double motor_force_max_n = 87000.0;
  double motor_power_min_w = -585000.0;
  double motor_power_max_w = 585000.0;
  double brake_force_min_n = -180000.0;  // friction brake, <= 0

  double fc_power_min_w = 24000.0;
  double fc_power_max_w = 400000.0;
  double batt_power_min_w = -600000.0;
  double batt_power_max_w = 600000.0;

  double batt_capacity_kwh = 220.0;
  double batt_resistance_ohm = 0.0217;
  double batt_open_circuit_v = 600.0;
  double soc_min = 0.20;
  double soc_max = 0.80;

  double aux_power_w = 85000.0;

  double temp_max_c = 40.0;
  double cooling_power_max_w = 15000.0;  // thermal removal rate cap
  double cooling_cop = 4.0;              // removed heat per electrical watt
  double batt_mass_kg = 3000.0;
  double batt_specific_heat = 1000.0;    // [J/(kg K)]
  double eta_discharge = 0.9;            // average battery efficiency, discharge
  double eta_charge = 0.9;               // average battery efficiency, charge
  double heat_transfer_w_per_k = 25.0;   // ambient exchange coefficient

  double equivalent_mass() const { return mass_kg * (1.0 + rotating_mass_factor); }
  double capacity_ah() const { return batt_capacity_kwh * 1000.0 / batt_open_circuit_v; }
  double temp_max_k() const { return temp_max_c + kKelvinOffset; }

  std::string to_json() const;
  static TrainParameters from_json(const std::string& text);
  static TrainParameters load(const std::filesystem::path& path);
};

/// One optimization/simulation scenario.
struct ScenarioConfig {
  double tau_s = 5220.0;        // required journey time including dwell
  double zeta0 = 0.5;           // initial (and required terminal) SOC fraction
  double t_amb_c = 20.0;
  double t_batt0_c = 20.0;      // initial battery temperature
  double v_stop_mps = 0.1;      // station crawl speed
  double delta_s_m = 10.0;      // spatial step
  double delta_t_sim_s = 0.1;   // forward-simulation step

  std::string to_json() const;
  static ScenarioConfig from_json(const std::string& text);
  static ScenarioConfig load(const std::filesystem::path& path);

  /// Battery pre-heat rule for cold ambients: the pack starts at 10 degC when
  /// the ambient is below that, otherwise at ambient temperature.
  static double preheated_t_batt0_c(double t_amb_c) { return t_amb_c < 10.0 ? 10.0 : t_amb_c; }
};

}  // namespace hytrain
