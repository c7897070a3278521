#include "hytrain/train_params.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hytrain {
namespace {

using nlohmann::json;

double want(const json& j, const char* key, double fallback, bool* any_missing) {
  if (j.contains(key)) {
    if (!j.at(key).is_number()) throw std::runtime_error(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
  }
  if (any_missing) *any_missing = true;
  return fallback;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string TrainParameters::to_json() const {
  json j;
  j["mass_kg"] = mass_kg;
  j["rotating_mass_factor"] = rotating_mass_factor;
  j["davis_a_n"] = davis_a_n;
  j["davis_b_kg_per_s"] = davis_b_kg_per_s;
  j["davis_c_kg_per_m"] = davis_c_kg_per_m;
  j["motor_force_min_n"] = motor_force_min_n;
  j["motor_force_max_n"] = motor_force_max_n;
  j["motor_power_min_w"] = motor_power_min_w;
  j["motor_power_max_w"] = motor_power_max_w;
  j["brake_force_min_n"] = brake_force_min_n;
  j["fc_power_min_w"] = fc_power_min_w;
  j["fc_power_max_w"] = fc_power_max_w;
  j["batt_power_min_w"] = batt_power_min_w;
  j["batt_power_max_w"] = batt_power_max_w;
  j["batt_capacity_kwh"] = batt_capacity_kwh;
  j["batt_resistance_ohm"] = batt_resistance_ohm;
  j["batt_open_circuit_v"] = batt_open_circuit_v;
  j["soc_min"] = soc_min;
  j["soc_max"] = soc_max;
  j["aux_power_w"] = aux_power_w;
  j["temp_max_c"] = temp_max_c;
  j["cooling_power_max_w"] = cooling_power_max_w;
  j["cooling_cop"] = cooling_cop;
  j["batt_mass_kg"] = batt_mass_kg;
  j["batt_specific_heat"] = batt_specific_heat;
  j["eta_discharge"] = eta_discharge;
  j["eta_charge"] = eta_charge;
  j["heat_transfer_w_per_k"] = heat_transfer_w_per_k;
  return j.dump(2) + "\n";
}

TrainParameters TrainParameters::from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.is_object()) throw std::runtime_error("train parameters: top-level JSON object expected");
  TrainParameters d;  // defaults
  TrainParameters p;
  p.mass_kg = want(j, "mass_kg", d.mass_kg, nullptr);
  p.rotating_mass_factor = want(j, "rotating_mass_factor", d.rotating_mass_factor, nullptr);
  p.davis_a_n = want(j, "davis_a_n", d.davis_a_n, nullptr);
  p.davis_b_kg_per_s = want(j, "davis_b_kg_per_s", d.davis_b_kg_per_s, nullptr);
  p.davis_c_kg_per_m = want(j, "davis_c_kg_per_m", d.davis_c_kg_per_m, nullptr);
  p.motor_force_min_n = want(j, "motor_force_min_n", d.motor_force_min_n, nullptr);
  p.motor_force_max_n = want(j, "motor_force_max_n", d.motor_force_max_n, nullptr);
  p.motor_power_min_w = want(j, "motor_power_min_w", d.motor_power_min_w, nullptr);
  p.motor_power_max_w = want(j, "motor_power_max_w", d.motor_power_max_w, nullptr);
  p.brake_force_min_n = want(j, "brake_force_min_n", d.brake_force_min_n, nullptr);
  p.fc_power_min_w = want(j, "fc_power_min_w", d.fc_power_min_w, nullptr);
  p.fc_power_max_w = want(j, "fc_power_max_w", d.fc_power_max_w, nullptr);
  p.batt_power_min_w = want(j, "batt_power_min_w", d.batt_power_min_w, nullptr);
  p.batt_power_max_w = want(j, "batt_power_max_w", d.batt_power_max_w, nullptr);
  p.batt_capacity_kwh = want(j, "batt_capacity_kwh", d.batt_capacity_kwh, nullptr);
  p.batt_resistance_ohm = want(j, "batt_resistance_ohm", d.batt_resistance_ohm, nullptr);
  p.batt_open_circuit_v = want(j, "batt_open_circuit_v", d.batt_open_circuit_v, nullptr);
  p.soc_min = want(j, "soc_min", d.soc_min, nullptr);
  p.soc_max = want(j, "soc_max", d.soc_max, nullptr);
  p.aux_power_w = want(j, "aux_power_w", d.aux_power_w, nullptr);
  p.temp_max_c = want(j, "temp_max_c", d.temp_max_c, nullptr);
  p.cooling_power_max_w = want(j, "cooling_power_max_w", d.cooling_power_max_w, nullptr);
  p.cooling_cop = want(j, "cooling_cop", d.cooling_cop, nullptr);
  p.batt_mass_kg = want(j, "batt_mass_kg", d.batt_mass_kg, nullptr);
  p.batt_specific_heat = want(j, "batt_specific_heat", d.batt_specific_heat, nullptr);
  p.eta_discharge = want(j, "eta_discharge", d.eta_discharge, nullptr);
  p.eta_charge = want(j, "eta_charge", d.eta_charge, nullptr);
  p.heat_transfer_w_per_k = want(j, "heat_transfer_w_per_k", d.heat_transfer_w_per_k, nullptr);

  if (p.mass_kg <= 0) throw std::runtime_error("train parameters: mass_kg must be positive");
  if (p.rotating_mass_factor < 0) throw std::runtime_error("train parameters: rotating_mass_factor must be >= 0");
  if (p.motor_force_max_n <= 0 || p.motor_force_min_n >= 0)
    throw std::runtime_error("train parameters: motor force bounds must straddle zero");
  if (p.brake_force_min_n > 0) throw std::runtime_error("train parameters: brake_force_min_n must be <= 0");
  if (p.fc_power_min_w < 0 || p.fc_power_max_w <= p.fc_power_min_w)
    throw std::runtime_error("train parameters: fuel-cell power bounds invalid");
  if (p.batt_capacity_kwh <= 0 || p.batt_open_circuit_v <= 0 || p.batt_resistance_ohm <= 0)
    throw std::runtime_error("train parameters: battery electrical parameters must be positive");
  if (!(p.soc_min >= 0 && p.soc_min < p.soc_max && p.soc_max <= 1))
    throw std::runtime_error("train parameters: need 0 <= soc_min < soc_max <= 1");
  if (p.cooling_cop <= 0 || p.cooling_power_max_w < 0)
    throw std::runtime_error("train parameters: cooling parameters invalid");
  if (p.batt_mass_kg <= 0 || p.batt_specific_heat <= 0 || p.heat_transfer_w_per_k < 0)
    throw std::runtime_error("train parameters: thermal parameters invalid");
  if (!(p.eta_discharge > 0 && p.eta_discharge <= 1 && p.eta_charge > 0 && p.eta_charge <= 1))
    throw std::runtime_error("train parameters: battery efficiencies must lie in (0, 1]");
  double p_lim = p.batt_open_circuit_v * p.batt_open_circuit_v / (4.0 * p.batt_resistance_ohm);
  if (p.batt_power_max_w > p_lim)
    throw std::runtime_error("train parameters: batt_power_max_w exceeds the open-circuit delivery limit U^2/(4R)");
  return p;
}

TrainParameters TrainParameters::load(const std::filesystem::path& path) {
  try {
    return from_json(read_text(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string ScenarioConfig::to_json() const {
  json j;
  j["tau_s"] = tau_s;
  j["zeta0"] = zeta0;
  j["t_amb_c"] = t_amb_c;
  j["t_batt0_c"] = t_batt0_c;
  j["v_stop_mps"] = v_stop_mps;
  j["delta_s_m"] = delta_s_m;
  j["delta_t_sim_s"] = delta_t_sim_s;
  return j.dump(2) + "\n";
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.is_object()) throw std::runtime_error("scenario: top-level JSON object expected");
  ScenarioConfig d;
  ScenarioConfig s;
  s.tau_s = want(j, "tau_s", d.tau_s, nullptr);
  s.zeta0 = want(j, "zeta0", d.zeta0, nullptr);
  s.t_amb_c = want(j, "t_amb_c", d.t_amb_c, nullptr);
  s.t_batt0_c = want(j, "t_batt0_c", preheated_t_batt0_c(s.t_amb_c), nullptr);
  s.v_stop_mps = want(j, "v_stop_mps", d.v_stop_mps, nullptr);
  s.delta_s_m = want(j, "delta_s_m", d.delta_s_m, nullptr);
  s.delta_t_sim_s = want(j, "delta_t_sim_s", d.delta_t_sim_s, nullptr);
  if (s.tau_s <= 0) throw std::runtime_error("scenario: tau_s must be positive");
  if (!(s.zeta0 > 0 && s.zeta0 < 1)) throw std::runtime_error("scenario: zeta0 must lie in (0, 1)");
  if (s.v_stop_mps <= 0) throw std::runtime_error("scenario: v_stop_mps must be positive");
  if (s.delta_s_m <= 0) throw std::runtime_error("scenario: delta_s_m must be positive");
  if (s.delta_t_sim_s <= 0) throw std::runtime_error("scenario: delta_t_sim_s must be positive");
  return s;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_text(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace hytrain
