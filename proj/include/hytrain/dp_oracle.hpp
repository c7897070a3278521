#pragma once

#include <vector>

#include "hytrain/kernels.hpp"
#include "hytrain/maps.hpp"
#include "hytrain/route.hpp"
#include "hytrain/train_params.hpp"

namespace hytrain {

/// Grid resolution for the exhaustive oracle. refined() halves every spacing
/// while keeping the old nodes, so a refined search can always reproduce a
/// coarser winner and its best fuel never goes up (modulo state snapping).
struct DpGridSpec {
  int v_points = 21;
  int soc_points = 21;
  int temp_points = 11;
  int traction_levels = 15;  // combined motor+friction command
  int fc_levels = 15;
  int cooling_levels = 3;
  int time_buckets_per_interval = 4;
  // Admissible |t_end - tau|. Nonpositive means half of this spec's time
  // bucket; refined() freezes the parent's effective window so the feasible
  // set only grows under refinement.
  double terminal_window_s = -1.0;

  DpGridSpec refined(double tau_s, int n_intervals) const;
};

struct DpControl {
  double f_cmd_n = 0;     // split into motor force then friction remainder
  double p_fc_w = 0;
  double cooling_w = 0;   // thermal removal rate
};

struct DpOracleResult {
  double fuel_j = 0;         // exact replay of the winning control sequence
  double grid_score_j = 0;   // table objective: snapped fuel plus residual prices
  double journey_time_s = 0; // replay
  double v_end_mps = 0;
  double zeta_end = 0;
  double t_end_c = 0;
  double brake_clamp_j = 0;  // kinetic energy dumped at dwell entries
  long long transitions = 0; // expanded (state, control) pairs
  std::vector<DpControl> controls;  // one per interval
};

/// Exhaustive dynamic program over the exact discrete models: bilinear motor
/// map, fuel-cell curve, square-root battery rate, per-second heat balance.
/// No convex surrogates and no relaxations anywhere, so the returned fuel is
/// a valid upper bound on what any method can claim for the same instance.
/// The winning control sequence is replayed without grid snapping and that
/// fuel is reported; the snapped table value is kept alongside.
///
/// Intended for small instances; throws if the route has more than
/// max_intervals intervals or no grid trajectory meets the terminal
/// conditions (arrival within the time window, charge sustained, stopped).
DpOracleResult dp_oracle(const RouteProfile& route, const TrainParameters& params,
                         const ScenarioConfig& scenario, const MotorEfficiencyMap& motor_map,
                         const FuelCellCurve& fc_curve, const DpGridSpec& spec = {},
                         kernels::Mode mode = kernels::default_mode(), int max_intervals = 30);

}  // namespace hytrain
