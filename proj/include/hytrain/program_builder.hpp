#pragma once

#include <vector>

#include "hytrain/conic_program.hpp"
#include "hytrain/route.hpp"
#include "hytrain/surrogate.hpp"
#include "hytrain/train_params.hpp"

namespace hytrain {

/// Column roles within one interval block of the assembled program. The first
/// group are the model states and controls, then the cone auxiliaries, then
/// the nonnegative slacks of the linear inequalities. Values index the
/// concurrent layout; the sequential layout drops the thermal symbols.
enum class Col : int {
  kZNext = 0,   // z_{i+1} [m^2/s^2]
  kDeltaZeta,   // SOC drop over the interval [fraction]
  kZetaNext,    // zeta_{i+1} [fraction]
  kTNext,       // T_{i+1} [degC]
  kDeltaT,      // temperature change [K]
  kFMotor,      // motor force [N]
  kFBrake,      // friction brake force [N], <= 0
  kFFc,         // fuel-cell fictitious force [N]
  kFBatt,       // battery fictitious force [N]
  kFDis,        // discharging image of F_batt [N], >= 0
  kFChr,        // charging image of F_batt [N], <= 0
  kQCool,       // active-cooling heat removal per meter [J/m]
  kLambdaV,     // reciprocal speed [s/m]
  kV,           // interval speed [m/s]
  kSqrt2,       // pinned sqrt(2): cone (v*lambda_v >= 1) tail
  kZb,          // copy of the z the speed cone is anchored to
  kHalfB,       // pinned 1/2
  kVb,          // copy of v inside the z >= v^2 cone
  kUm,          // epigraph of the motor draw quadratic [N]
  kHalfM,       // pinned 1/2
  kMz,          // sqrt(p20) * z link
  kMf,          // sqrt(p02) * F_m link
  kLambdaZeta,  // SOC-rate auxiliary [fraction]
  kLvd,         // copy of lambda_v inside the battery cone
  kBd,          // sqrt(2 alpha ds) * F_batt link
  kTFc,         // epigraph of the fuel quadratic [N]
  kHalfF,       // pinned 1/2
  kFz,          // sqrt(p20') * z link
  kFf,          // sqrt(p02') * F_fc link
  kSPb,         // slack of the power-balance inequality
  kSVLo,
  kSVHi,
  kSZLo,
  kSZHi,
  kSZetaLo,
  kSZetaHi,
  kSTHi,
  kSFmLo,
  kSFmHi,
  kSFmpLo,  // motor power region, lower
  kSFmpHi,  // motor power region, upper
  kSFbrkLo,
  kSFbrkHi,
  kSFfcLo,
  kSFfcHi,
  kSFbattLo,
  kSFbattHi,
  kSQcLo,
  kSQcHi,
  kSFdisLo,
  kSFdisRel,  // F_dis >= F_batt
  kSFchrHi,
  kSFchrRel,  // F_batt >= F_chr
  kColCount
};

struct BuildOptions {
  /// When false the battery temperature cap is parked far above any reachable
  /// value, which reduces the concurrent program to a thermally unconstrained
  /// one (used by the equivalence tests against the sequential variant).
  bool temperature_bound = true;
  double parked_temp_bound_c = 500.0;
};

/// Geometry of the assembled program: fixed per-interval column stride plus
/// flags for the intervals that get specialized treatment.
struct ProgramLayout {
  bool thermal = true;  // false for the sequential variant
  int n = 0;            // interval count
  int stride = 0;       // columns per interval (53 thermal, 41 sequential)
  int rows_per_interval = 0;
  int time_row = -1;    // journey-time equality row
  int charge_row = -1;  // charge-sustaining equality row

  /// Dwell intervals pin v = v_stop and carry the reciprocal-speed relation
  /// as a linear bound instead of a cone (the cone would have no interior
  /// once v is fixed).
  std::vector<char> v_pinned;
  /// Intervals that start from a standstill node (journey start and the
  /// interval after each dwell) anchor the z >= v^2 cone to their exit state;
  /// anchoring to the pinned entry state would force the whole interval to
  /// crawl at v_stop.
  std::vector<char> exit_anchored;
  /// Nodes where z_{i+1} is pinned to v_stop^2 (entering/leaving a station
  /// and the journey end).
  std::vector<char> z_node_pinned;

  /// Program column of a symbol, or -1 when the variant drops it.
  int col(int interval, Col c) const;
};

/// A ConicProgram plus everything downstream stages need to interpret its
/// solution vector.
///
/// The SOC and temperature families use internal units chosen so variable
/// values stay within a few decades of 1: SOC columns carry
/// zeta * soc_scale and temperature columns t * temp_scale. Equilibration
/// takes care of coefficient magnitudes, but solution magnitudes it cannot
/// touch, and values near 1e7 cap the accuracy of the step equations near
/// 1e-9 in double precision. Solutions map back at extraction.
struct BuiltProgram {
  ConicProgram program;
  ProgramLayout layout;
  std::vector<double> delta_s;        // interval lengths [m]
  std::vector<double> delta_t_per_m;  // convection time per meter [s/m]
  double v_stop = 0;
  double zeta0 = 0;
  double t_batt0_c = 0;
  double tau_s = 0;
  double soc_scale = 1;   // program SOC units per SOC fraction
  double temp_scale = 1;  // program temperature units per degC
};

/// Average travel time per meter used by the heat-exchange terms on track
/// intervals: (tau - total dwell time) / total track length. Dwell intervals
/// use the exact 1/v_stop instead. Throws if tau does not exceed the dwell
/// total.
double compute_average_delta_t(const RouteProfile& route, double tau_s);

/// Running resistance a + b v + c z + m g sin(grade); zero on dwell intervals,
/// which emulate a stationary train.
double external_force(double v, double z, double grade_angle, const TrainParameters& params,
                      bool is_dwell);

/// Assembles the concurrent speed/split/temperature program: kinetic, SOC,
/// and thermal chains, journey-time and charge-sustaining equalities, box and
/// speed-coupled bounds, and the relaxed cones. The program is finalized and
/// equilibrated; solve it with solve_program and map the solution back with
/// extract_trajectory.
BuiltProgram build_concurrent(const RouteProfile& route, const TrainParameters& params,
                              const ScenarioConfig& scenario, const SurrogateSet& surrogates,
                              const BuildOptions& options = {});

/// The thermally blind baseline: same program without the temperature state,
/// heat balance, cooling, or charge/discharge split variables.
BuiltProgram build_sequential(const RouteProfile& route, const TrainParameters& params,
                              const ScenarioConfig& scenario, const SurrogateSet& surrogates);

}  // namespace hytrain
