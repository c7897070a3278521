#include "hytrain/program_builder.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hytrain {

namespace {

constexpr int kFullStride = static_cast<int>(Col::kColCount);
constexpr double kSqrtTwo = 1.4142135623730951;

constexpr std::array<const char*, kFullStride> kColNames = {
    "z_next",    "d_zeta",    "zeta",      "t_batt",     "d_t",       "f_m",
    "f_brk",     "f_fc",      "f_batt",    "f_dis",      "f_chr",     "q_cool",
    "lam_v",     "v",         "sqrt2",     "z_b",        "half_b",    "v_b",
    "u_m",       "half_m",    "m_z",       "m_f",        "lam_zeta",  "lam_v_d",
    "b_d",       "t_fc",      "half_f",    "f_z",        "f_f",       "s_pb",
    "s_v_lo",    "s_v_hi",    "s_z_lo",    "s_z_hi",     "s_zeta_lo", "s_zeta_hi",
    "s_t_hi",    "s_fm_lo",   "s_fm_hi",   "s_fmp_lo",   "s_fmp_hi",  "s_fbrk_lo",
    "s_fbrk_hi", "s_ffc_lo",  "s_ffc_hi",  "s_fbatt_lo", "s_fbatt_hi", "s_qc_lo",
    "s_qc_hi",   "s_fdis_lo", "s_fdis_rel", "s_fchr_hi", "s_fchr_rel"};

bool thermal_only(Col c) {
  switch (c) {
    case Col::kTNext:
    case Col::kDeltaT:
    case Col::kFDis:
    case Col::kFChr:
    case Col::kQCool:
    case Col::kSTHi:
    case Col::kSQcLo:
    case Col::kSQcHi:
    case Col::kSFdisLo:
    case Col::kSFdisRel:
    case Col::kSFchrHi:
    case Col::kSFchrRel:
      return true;
    default:
      return false;
  }
}

struct Offsets {
  std::array<int, kFullStride> off{};
  int stride = 0;
};

Offsets make_offsets(bool thermal) {
  Offsets t;
  int k = 0;
  for (int i = 0; i < kFullStride; ++i) {
    if (thermal || !thermal_only(static_cast<Col>(i))) {
      t.off[i] = k++;
    } else {
      t.off[i] = -1;
    }
  }
  t.stride = k;
  return t;
}

const Offsets& offsets_for(bool thermal) {
  static const Offsets full = make_offsets(true);
  static const Offsets reduced = make_offsets(false);
  return thermal ? full : reduced;
}

/// Linear source: an earlier interval's column, or a fixed boundary value for
/// the first interval.
struct Src {
  int col = -1;    // -1 means constant
  double value = 0;
};

/// Accumulates one equality row; constant sources fold into the rhs.
class RowAccum {
 public:
  explicit RowAccum(ConicProgram& p) : prog_(p) {}

  RowAccum& term(int col, double coeff) {
    entries_.emplace_back(col, coeff);
    return *this;
  }
  RowAccum& src(const Src& s, double coeff) {
    if (s.col >= 0) {
      entries_.emplace_back(s.col, coeff);
    } else {
      rhs_ -= coeff * s.value;
    }
    return *this;
  }
  RowAccum& rhs(double v) {
    rhs_ += v;
    return *this;
  }
  int emit() {
    int r = prog_.add_row(rhs_);
    for (const auto& [c, v] : entries_) prog_.add_entry(r, c, v);
    entries_.clear();
    rhs_ = 0;
    return r;
  }

 private:
  ConicProgram& prog_;
  std::vector<std::pair<int, double>> entries_;
  double rhs_ = 0;
};

void validate_inputs(const RouteProfile& route, const TrainParameters& params,
                     const ScenarioConfig& scenario, const SurrogateSet& s, bool thermal,
                     const BuildOptions& options) {
  if (route.intervals.empty()) throw std::invalid_argument("route has no intervals");
  if (route.v_stop <= 0) throw std::invalid_argument("v_stop must be positive");
  double v_limit_max = 0;
  for (size_t i = 0; i < route.intervals.size(); ++i) {
    const auto& r = route.intervals[i];
    if (r.delta_s <= 0)
      throw std::invalid_argument("interval " + std::to_string(i) + " has non-positive length");
    if (r.v_max < route.v_stop - 1e-12)
      throw std::invalid_argument("interval " + std::to_string(i) + " speed limit below v_stop");
    v_limit_max = std::max(v_limit_max, r.v_max);
  }
  if (scenario.zeta0 < params.soc_min || scenario.zeta0 > params.soc_max)
    throw std::invalid_argument("initial SOC outside the allowed band");
  if (thermal && options.temperature_bound && scenario.t_batt0_c > params.temp_max_c)
    throw std::invalid_argument("initial battery temperature above the cap");

  if (s.motor.p11 != 0.0 || s.fuelcell.p11 != 0.0)
    throw std::invalid_argument("bilinear surrogate term is not cone-representable");
  if (s.motor.p20 < 0 || s.motor.p02 < 0 || s.fuelcell.p20 < 0 || s.fuelcell.p02 < 0)
    throw std::invalid_argument("surrogate curvature must be nonnegative");
  if (s.soc.alpha < 0) throw std::invalid_argument("SOC-rate curvature must be nonnegative");

  // The motor surrogate must cover the commanded force range and the route's
  // top speed. The low-speed end is deliberately not checked: intervals next
  // to stops evaluate the quadratic below its fitted box, which is the
  // intended extrapolation toward standstill.
  const double tol = 1e-9;
  if (s.motor.f_min > params.motor_force_min_n + tol ||
      s.motor.f_max < params.motor_force_max_n - tol)
    throw std::invalid_argument("motor surrogate does not cover the motor force range");
  if (s.motor.v_max + tol < v_limit_max || s.fuelcell.v_max + tol < v_limit_max)
    throw std::invalid_argument("surrogate speed range does not cover the route's speed limits");
}

BuiltProgram build_impl(const RouteProfile& route, const TrainParameters& params,
                        const ScenarioConfig& scenario, const SurrogateSet& s, bool thermal,
                        const BuildOptions& options) {
  validate_inputs(route, params, scenario, s, thermal, options);
  const double dt_avg = compute_average_delta_t(route, scenario.tau_s);

  const Offsets& off = offsets_for(thermal);
  const int n = static_cast<int>(route.intervals.size());
  const int stride = off.stride;
  const double v_stop = route.v_stop;
  const double z_stop = v_stop * v_stop;
  const double z0 = z_stop;

  BuiltProgram built;
  ProgramLayout& lay = built.layout;
  lay.thermal = thermal;
  lay.n = n;
  lay.stride = stride;
  lay.rows_per_interval = thermal ? 41 : 32;
  lay.v_pinned.assign(n, 0);
  lay.exit_anchored.assign(n, 0);
  lay.z_node_pinned.assign(n, 0);

  // Node pinning: z_{i+1} is fixed to v_stop^2 wherever the adjacent speed
  // limits force it there (station entry/exit and the journey end). An
  // interval whose entry and exit are both pinned cannot move, so its speed
  // is pinned too and the reciprocal-speed cone degenerates to a bound.
  // An interval leaving a pinned node anchors its z >= v^2 cone to the exit
  // state so that departing a standstill does not force a crawl.
  std::vector<double> z_cap(n);
  for (int i = 0; i < n; ++i) {
    double vc = route.intervals[i].v_max;
    if (i + 1 < n) vc = std::min(vc, route.intervals[i + 1].v_max);
    if (i + 1 == n) vc = v_stop;
    z_cap[i] = vc * vc;
    lay.z_node_pinned[i] = z_cap[i] <= z_stop * (1.0 + 1e-9) ? 1 : 0;
    if (lay.z_node_pinned[i]) z_cap[i] = z_stop;
  }
  for (int i = 0; i < n; ++i) {
    bool entry_pinned = i == 0 ? true : lay.z_node_pinned[i - 1] != 0;
    lay.v_pinned[i] = (entry_pinned && lay.z_node_pinned[i]) ? 1 : 0;
    lay.exit_anchored[i] = (!lay.v_pinned[i] && entry_pinned) ? 1 : 0;
  }

  ConicProgram& prog = built.program;

  // Columns, names keyed for the layout audit.
  for (int i = 0; i < n; ++i) {
    const std::string prefix = "i" + std::to_string(i) + ".";
    for (int j = 0; j < kFullStride; ++j) {
      if (off.off[j] < 0) continue;
      prog.add_var(prefix + kColNames[j]);
    }
  }

  auto col = [&](int i, Col c) { return i * stride + off.off[static_cast<int>(c)]; };

  // Model constants.
  const double meq2 = params.equivalent_mass() / 2.0;
  const double a_n = params.davis_a_n;
  const double b_n = params.davis_b_kg_per_s;
  const double c_n = params.davis_c_kg_per_m;
  const auto& qm = s.motor;
  const auto& qf = s.fuelcell;
  const double alpha = s.soc.alpha;
  const double beta = s.soc.beta;
  const double sqrt_p20m = std::sqrt(qm.p20);
  const double sqrt_p02m = std::sqrt(qm.p02);
  const double sqrt_p20f = std::sqrt(qf.p20);
  const double sqrt_p02f = std::sqrt(qf.p02);
  const double mcb = params.batt_mass_kg * params.batt_specific_heat;
  const double k_dis = 1.0 - params.eta_discharge;
  const double k_chr = 1.0 - params.eta_charge;
  const double h_conv = params.heat_transfer_w_per_k;
  const double gamma_cop = params.cooling_cop;
  const double temp_cap = options.temperature_bound ? params.temp_max_c : options.parked_temp_bound_c;

  // Internal unit scales for the SOC and temperature families (see header).
  // Chosen so variable VALUES stay within a few decades of 1: iterative
  // refinement of the step equations bottoms out near eps * ||solution||,
  // so a state variable worth 1e7 in program units caps the achievable
  // dual residual around 1e-9 no matter how the coefficients are scaled.
  const double s_soc = 1000.0;  // SOC carried in milli-units
  const double s_temp = 1.0;    // temperature carried in degC

  built.delta_s.resize(n);
  built.soc_scale = s_soc;
  built.temp_scale = s_temp;
  built.delta_t_per_m.resize(n);
  built.v_stop = v_stop;
  built.zeta0 = scenario.zeta0;
  built.t_batt0_c = scenario.t_batt0_c;
  built.tau_s = scenario.tau_s;

  RowAccum row(prog);

  for (int i = 0; i < n; ++i) {
    const RouteInterval& r = route.intervals[i];
    const double ds = r.delta_s;
    const bool dwell = r.is_dwell;
    const bool v_pin = lay.v_pinned[i] != 0;
    const bool z_pin = lay.z_node_pinned[i] != 0;
    const double dtm = dwell ? 1.0 / v_stop : dt_avg;
    built.delta_s[i] = ds;
    built.delta_t_per_m[i] = dtm;

    const Src z_src = i == 0 ? Src{-1, z0} : Src{col(i - 1, Col::kZNext), 0};
    const Src zeta_src = i == 0 ? Src{-1, scenario.zeta0 * s_soc} : Src{col(i - 1, Col::kZetaNext), 0};
    const Src t_src = i == 0 ? Src{-1, scenario.t_batt0_c * s_temp} : Src{col(i - 1, Col::kTNext), 0};
    const Src z_cone_src = lay.exit_anchored[i] ? Src{col(i, Col::kZNext), 0} : z_src;

    // Kinetic energy balance; running resistance is zeroed while dwelling.
    row.term(col(i, Col::kZNext), meq2)
        .term(col(i, Col::kFMotor), -ds)
        .term(col(i, Col::kFBrake), -ds)
        .src(z_src, -meq2);
    if (!dwell) {
      row.term(col(i, Col::kV), ds * b_n)
          .src(z_src, ds * c_n)
          .rhs(-ds * (a_n + params.mass_kg * kGravity * std::sin(r.grade_angle)));
    }
    row.emit();

    // SOC chain and rate auxiliary.
    row.term(col(i, Col::kZetaNext), 1).term(col(i, Col::kDeltaZeta), 1).src(zeta_src, -1).emit();
    row.term(col(i, Col::kLambdaZeta), 1)
        .term(col(i, Col::kDeltaZeta), -1)
        .term(col(i, Col::kFBatt), beta * ds * s_soc)
        .emit();

    if (thermal) {
      // Temperature chain and heat balance.
      row.term(col(i, Col::kTNext), 1).term(col(i, Col::kDeltaT), -1).src(t_src, -1).emit();
      row.term(col(i, Col::kDeltaT), mcb / s_temp)
          .term(col(i, Col::kFDis), -ds * k_dis)
          .term(col(i, Col::kFChr), ds * k_chr)
          .term(col(i, Col::kQCool), ds)
          .src(t_src, ds * h_conv * dtm / s_temp)
          .rhs(ds * h_conv * dtm * scenario.t_amb_c)
          .emit();
    }

    // Power balance: motor draw + cooling + auxiliaries <= supplied force.
    row.term(col(i, Col::kFMotor), qm.p01)
        .term(col(i, Col::kUm), 1)
        .term(col(i, Col::kLambdaV), params.aux_power_w)
        .term(col(i, Col::kFFc), -1)
        .term(col(i, Col::kFBatt), -1)
        .term(col(i, Col::kSPb), 1)
        .src(z_src, qm.p10)
        .rhs(-qm.p00);
    if (thermal) row.term(col(i, Col::kQCool), 1.0 / gamma_cop);
    row.emit();

    // Cone auxiliaries: pins and variable links.
    row.term(col(i, Col::kSqrt2), 1).rhs(kSqrtTwo).emit();
    row.term(col(i, Col::kZb), 1).src(z_cone_src, -1).emit();
    row.term(col(i, Col::kHalfB), 1).rhs(0.5).emit();
    row.term(col(i, Col::kVb), 1).term(col(i, Col::kV), -1).emit();
    row.term(col(i, Col::kHalfM), 1).rhs(0.5).emit();
    row.term(col(i, Col::kMz), 1).src(z_src, -sqrt_p20m).emit();
    row.term(col(i, Col::kMf), 1).term(col(i, Col::kFMotor), -sqrt_p02m).emit();
    row.term(col(i, Col::kLvd), 1).term(col(i, Col::kLambdaV), -1).emit();
    row.term(col(i, Col::kBd), 1).term(col(i, Col::kFBatt), -std::sqrt(2.0 * alpha * ds * s_soc)).emit();
    row.term(col(i, Col::kHalfF), 1).rhs(0.5).emit();
    row.term(col(i, Col::kFz), 1).src(z_src, -sqrt_p20f).emit();
    row.term(col(i, Col::kFf), 1).term(col(i, Col::kFFc), -sqrt_p02f).emit();

    // Speed box. Pinned intervals fix v and carry the reciprocal-speed
    // relation as a bound; the cone over (lam_v, v, sqrt2) would have an
    // empty interior with v fixed.
    if (v_pin) {
      // lam_v is pinned too: a stop lasts exactly its scheduled time. Left as
      // a lower bound the solver could park longer whenever the marginal
      // value of journey time exceeds the auxiliary draw, silently stretching
      // the timetable.
      row.term(col(i, Col::kV), 1).rhs(v_stop).emit();
      row.term(col(i, Col::kLambdaV), 1).rhs(1.0 / v_stop).emit();
      row.term(col(i, Col::kSVLo), 1).rhs(1.0).emit();
    } else {
      row.term(col(i, Col::kV), 1).term(col(i, Col::kSVLo), -1).rhs(std::max(r.v_min, v_stop)).emit();
      row.term(col(i, Col::kV), 1).term(col(i, Col::kSVHi), 1).rhs(r.v_max).emit();
    }

    // Kinetic-state box. Pinned nodes turn the bound pair into an equality;
    // the freed slacks are parked on a fixed budget so every cone member
    // keeps a strictly feasible point.
    if (z_pin) {
      row.term(col(i, Col::kZNext), 1).rhs(z_stop).emit();
      row.term(col(i, Col::kSZLo), 1).term(col(i, Col::kSZHi), 1);
      if (v_pin) {
        row.term(col(i, Col::kSVHi), 1).rhs(3.0);
      } else {
        row.rhs(2.0);
      }
      row.emit();
    } else {
      row.term(col(i, Col::kZNext), 1).term(col(i, Col::kSZLo), -1).rhs(z_stop).emit();
      row.term(col(i, Col::kZNext), 1).term(col(i, Col::kSZHi), 1).rhs(z_cap[i]).emit();
    }

    // SOC band.
    row.term(col(i, Col::kZetaNext), 1).term(col(i, Col::kSZetaLo), -1).rhs(params.soc_min * s_soc).emit();
    row.term(col(i, Col::kZetaNext), 1).term(col(i, Col::kSZetaHi), 1).rhs(params.soc_max * s_soc).emit();

    if (thermal) {
      row.term(col(i, Col::kTNext), 1).term(col(i, Col::kSTHi), 1).rhs(temp_cap * s_temp).emit();
    }

    // Motor force box and speed-coupled power region. A parked train's
    // traction force is identically zero; without the pin a slack dwell
    // power balance leaves F_m floating anywhere in the box, and the
    // forward simulation would see that as a phantom motor draw.
    if (dwell) {
      row.term(col(i, Col::kFMotor), 1).emit();
      row.term(col(i, Col::kSFmLo), 1).term(col(i, Col::kSFmHi), 1).rhs(2.0).emit();
    } else {
      row.term(col(i, Col::kFMotor), 1).term(col(i, Col::kSFmLo), -1).rhs(params.motor_force_min_n).emit();
      row.term(col(i, Col::kFMotor), 1).term(col(i, Col::kSFmHi), 1).rhs(params.motor_force_max_n).emit();
    }
    row.term(col(i, Col::kFMotor), 1)
        .term(col(i, Col::kLambdaV), -params.motor_power_min_w)
        .term(col(i, Col::kSFmpLo), -1)
        .emit();
    row.term(col(i, Col::kFMotor), 1)
        .term(col(i, Col::kLambdaV), -params.motor_power_max_w)
        .term(col(i, Col::kSFmpHi), 1)
        .emit();

    // Friction brake box.
    row.term(col(i, Col::kFBrake), 1).term(col(i, Col::kSFbrkLo), -1).rhs(params.brake_force_min_n).emit();
    row.term(col(i, Col::kFBrake), 1).term(col(i, Col::kSFbrkHi), 1).emit();

    // Fuel-cell and battery power regions (force bounds scale with lam_v).
    row.term(col(i, Col::kFFc), 1)
        .term(col(i, Col::kLambdaV), -params.fc_power_min_w)
        .term(col(i, Col::kSFfcLo), -1)
        .emit();
    row.term(col(i, Col::kFFc), 1)
        .term(col(i, Col::kLambdaV), -params.fc_power_max_w)
        .term(col(i, Col::kSFfcHi), 1)
        .emit();
    row.term(col(i, Col::kFBatt), 1)
        .term(col(i, Col::kLambdaV), -params.batt_power_min_w)
        .term(col(i, Col::kSFbattLo), -1)
        .emit();
    row.term(col(i, Col::kFBatt), 1)
        .term(col(i, Col::kLambdaV), -params.batt_power_max_w)
        .term(col(i, Col::kSFbattHi), 1)
        .emit();

    if (thermal) {
      // Cooling effort: nonnegative, rate-capped while moving.
      row.term(col(i, Col::kQCool), 1).term(col(i, Col::kSQcLo), -1).emit();
      row.term(col(i, Col::kQCool), 1)
          .term(col(i, Col::kLambdaV), -params.cooling_power_max_w)
          .term(col(i, Col::kSQcHi), 1)
          .emit();

      // Charge/discharge split images of F_batt.
      row.term(col(i, Col::kFDis), 1).term(col(i, Col::kSFdisLo), -1).emit();
      row.term(col(i, Col::kFDis), 1).term(col(i, Col::kFBatt), -1).term(col(i, Col::kSFdisRel), -1).emit();
      row.term(col(i, Col::kFChr), 1).term(col(i, Col::kSFchrHi), 1).emit();
      row.term(col(i, Col::kFBatt), 1).term(col(i, Col::kFChr), -1).term(col(i, Col::kSFchrRel), -1).emit();
    }

    // Cones for this interval.
    if (!v_pin) {
      prog.add_cone(ConeKind::Rsoc, col(i, Col::kLambdaV), 3);
      prog.add_cone(ConeKind::Rsoc, col(i, Col::kZb), 3);
    }
    prog.add_cone(ConeKind::Rsoc, col(i, Col::kUm), 4);
    prog.add_cone(ConeKind::Rsoc, col(i, Col::kLambdaZeta), 3);
    prog.add_cone(ConeKind::Rsoc, col(i, Col::kTFc), 4);
    prog.add_cone(ConeKind::NonNeg, col(i, Col::kSPb), stride - off.off[static_cast<int>(Col::kSPb)]);

    // Fuel objective: ds * (p00' + p10' z_i + p01' F_fc + t_fc).
    prog.set_objective(col(i, Col::kFFc), ds * qf.p01);
    prog.set_objective(col(i, Col::kTFc), ds);
    if (thermal) {
      // The split images are only bounded below by F_batt and 0; away from an
      // active temperature cap they would otherwise float freely (phantom
      // battery heat) and leave the optimal face degenerate. A price far
      // below the fuel slope pins them to max(F_batt,0)/min(F_batt,0)
      // without affecting any reported quantity. It must survive objective
      // normalization: 1e-4 of the fuel slope lands ~2.5 decades above the
      // dual tolerance, anything much smaller is invisible to the solver.
      const double eps_split = 1e-4 * qf.p01;
      prog.set_objective(col(i, Col::kFDis), ds * eps_split);
      prog.set_objective(col(i, Col::kFChr), -ds * eps_split);
    }
    if (i == 0) {
      prog.add_constant_term(ds * qf.p10 * z0);
    } else {
      prog.set_objective(col(i - 1, Col::kZNext), ds * qf.p10);
    }
    prog.add_constant_term(ds * qf.p00);
  }

  // Journey time and charge sustaining.
  for (int i = 0; i < n; ++i) row.term(col(i, Col::kLambdaV), built.delta_s[i]);
  lay.time_row = row.rhs(scenario.tau_s).emit();
  lay.charge_row = row.term(col(n - 1, Col::kZetaNext), 1).rhs(scenario.zeta0 * s_soc).emit();

  prog.finalize();
  prog.equilibrate(10);
  return built;
}

}  // namespace

int ProgramLayout::col(int interval, Col c) const {
  const int o = offsets_for(thermal).off[static_cast<int>(c)];
  if (o < 0) return -1;
  return interval * stride + o;
}

double compute_average_delta_t(const RouteProfile& route, double tau_s) {
  const double dwell = route.dwell_total_s();
  if (tau_s <= dwell)
    throw std::invalid_argument("journey time must exceed the total dwell time");
  if (route.total_track_length <= 0)
    throw std::invalid_argument("route has no track length");
  return (tau_s - dwell) / route.total_track_length;
}

double external_force(double v, double z, double grade_angle, const TrainParameters& params,
                      bool is_dwell) {
  if (is_dwell) return 0.0;
  return params.davis_a_n + params.davis_b_kg_per_s * v + params.davis_c_kg_per_m * z +
         params.mass_kg * kGravity * std::sin(grade_angle);
}

BuiltProgram build_concurrent(const RouteProfile& route, const TrainParameters& params,
                              const ScenarioConfig& scenario, const SurrogateSet& surrogates,
                              const BuildOptions& options) {
  return build_impl(route, params, scenario, surrogates, true, options);
}

BuiltProgram build_sequential(const RouteProfile& route, const TrainParameters& params,
                              const ScenarioConfig& scenario, const SurrogateSet& surrogates) {
  return build_impl(route, params, scenario, surrogates, false, BuildOptions{});
}

}  // namespace hytrain
