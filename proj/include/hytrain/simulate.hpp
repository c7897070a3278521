#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hytrain/maps.hpp"
#include "hytrain/route.hpp"
#include "hytrain/train_params.hpp"
#include "hytrain/trajectory.hpp"

namespace hytrain {

/// Raised when replayed commands leave the models' validity region: battery
/// power beyond U_oc^2/(4R), speed collapsing to zero between stations, or a
/// run that fails to reach the end of the route in bounded time.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

/// Bang-bang cooling controller with hysteresis, used when replaying the
/// thermally blind baseline: full cooling power above the on threshold, off
/// below the off threshold, previous state in between.
struct ThermostatState {
  bool on = false;
};

/// Returns the active heat-removal rate [W] and updates the hysteresis
/// state. Thresholds default to 2 K and 4 K under the temperature cap.
double thermostat_cooling(double t_batt_c, ThermostatState& state, const TrainParameters& params);

struct SimOptions {
  double dt_s = 0.1;        // integration step
  bool thermostat = false;  // replace commanded cooling with the thermostat
  double max_time_factor = 10.0;  // abort if t exceeds this multiple of tau
};

/// Time series produced by the exact-model replay, one row per step plus a
/// terminal row. All series have identical length; position is nondecreasing
/// and runs in the program's spatial coordinate (dwell stretches included).
struct SimTrace {
  std::vector<double> time_s;
  std::vector<double> position_m;
  std::vector<double> v_mps;
  std::vector<double> zeta;
  std::vector<double> t_batt_c;
  std::vector<double> p_fc_w;        // fuel-cell output, the residual actuator
  std::vector<double> p_batt_w;      // battery output, replayed as commanded
  std::vector<double> cooling_w;     // active heat-removal rate
  std::vector<double> fuel_j;        // cumulative hydrogen energy
  std::vector<double> cooling_elec_j;  // cumulative cooling electrical energy

  double journey_time_s = 0;
  double fuel_total_j = 0;
  double cooling_elec_total_j = 0;

  // Energy ledger over the whole run. By construction of the residual,
  // fc + discharge - charge = motor + aux + cooling electrical + dump
  // holds at every step to rounding.
  double motor_elec_j = 0;
  double aux_j = 0;
  double batt_discharge_j = 0;
  double batt_charge_j = 0;
  double dump_j = 0;          // oversupply the fuel cell could not back off
  double brake_clamp_j = 0;   // kinetic energy absorbed by station-stop clamps

  double peak_t_batt_c = 0;
  double zeta_min = 0, zeta_max = 0;

  // Terminal states for fidelity checks.
  double v_end = 0, zeta_end = 0, t_batt_end_c = 0;

  /// One row per step: 12-significant-digit fields, stable header.
  std::string to_csv() const;
};

/// Replays optimized per-interval commands through the exact models in the
/// time domain: zero-order hold by position, forward Euler at dt.
///
/// Exact models, not the program's relaxations: running resistance uses
/// v^2 (no z substitute), the SOC rate uses the square-root internal
/// resistance law, the heat balance uses the actual 1/v ambient coupling,
/// motor draw goes through the efficiency map, and fuel through the
/// fuel-cell curve. Battery and cooling follow their commands (or the
/// thermostat); the fuel cell serves the residual of the exact power
/// balance, so command-model mismatch lands in fuel for both methods alike.
///
/// Dwell stretches replay like track with zero running resistance, with
/// speed clamped to v_stop on entry (the platform stop); the clamped kinetic
/// energy is logged as friction-brake dissipation.
SimTrace simulate_forward(const TrajectoryResult& result, const TrainParameters& params,
                          const RouteProfile& route, const ScenarioConfig& scenario,
                          const MotorEfficiencyMap& motor_map, const FuelCellCurve& fc_curve,
                          const SimOptions& options = {});

}  // namespace hytrain
