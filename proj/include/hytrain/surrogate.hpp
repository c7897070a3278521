#pragma once

#include <array>
#include <optional>
#include <string>

#include "hytrain/maps.hpp"

namespace hytrain {

/// Convex quadratic surrogate of a per-meter energy quantity as a function of
/// force F [N] and squared speed z [m^2/s^2]:
///   q(F, z) = p00 + p10 z + p01 F + p20 z^2 + p11 F sqrt(z) + p02 F^2.
/// p11 is zero by default; a nonzero bilinear term is not second-order-cone
/// representable in the lifted variables and is only fitted for analysis.
struct QuadraticSurrogate {
  double p00 = 0, p10 = 0, p01 = 0, p20 = 0, p11 = 0, p02 = 0;
  double f_min = 0, f_max = 0;  // fitted force range [N]
  double v_min = 0, v_max = 0;  // fitted speed range [m/s]
  double fit_rms = 0;           // ||q - target||_2 / ||target||_2 over the sample grid

  double eval(double F, double z) const;
};

/// SOC depletion-rate surrogate q_zeta(P) = alpha P^2 + beta P [1/s] for
/// battery terminal power P [W], fraction SOC.
struct BatterySocSurrogate {
  double alpha = 0;  // [1/(W^2 s)] , >= 0
  double beta = 0;   // [1/(W s)]
  double p_min = 0, p_max = 0;  // fitted power range [W]
  double p_valid_max = 0;       // U^2/(4R): model validity limit
  double fit_rms = 0;

  double eval(double P) const { return alpha * P * P + beta * P; }
};

struct FitOptions {
  int n_force = 33;      // force-axis samples
  int n_speed = 33;      // speed-axis samples
  bool allow_p11 = false;
  double ridge = 1e-10;  // Tikhonov term on the normal equations
};

/// Exact SOC rate of Eq-style internal-resistance battery model:
/// current I = 2P / (U + sqrt(U^2 - 4 P R)) (stable for R -> 0), rate =
/// I / (3600 Q_Ah). Valid for P <= U^2/(4R).
double exact_soc_rate(double P, double R_ohm, double U_oc, double Q_Ah);

/// Fits the motor draw surrogate to target F/eta (driving) or F*eta
/// (regenerating) over the given force/speed box sampled from the map.
/// Throws if the map does not cover the box.
QuadraticSurrogate fit_motor_surrogate(const MotorEfficiencyMap& map, double f_min, double f_max,
                                       double v_min, double v_max, const FitOptions& opt = {});

/// Fits the fuel-cell fuel-per-meter surrogate sampled on a speed x power
/// grid (F = P/v, z = v^2, target = fuel_power(P)/v). The curve must cover
/// [p_min, p_max]. Throws on insufficient coverage.
QuadraticSurrogate fit_fuelcell_surrogate(const FuelCellCurve& curve, double p_min, double p_max,
                                          double v_min, double v_max, const FitOptions& opt = {});

/// Least-squares fit of alpha, beta to the exact SOC rate over
/// [p_min, p_max]; alpha is clamped to >= 0 (beta refitted if it binds).
BatterySocSurrogate fit_battery_surrogate(double R_ohm, double U_oc, double Q_Ah, double p_min,
                                          double p_max, int n_samples = 2001);

struct ConvexityReport {
  bool convex = false;
  double min_eigenvalue = 0;
  double arg_v = 0, arg_f = 0;  // where the minimum eigenvalue occurs
};

/// Samples the (v, F) Hessian [[2 p10 + 12 p20 v^2, p11], [p11, 2 p02]] over
/// the fitted box and reports the minimum eigenvalue. Also requires
/// p20 >= 0 and p02 >= 0.
ConvexityReport certify_convexity(const QuadraticSurrogate& q, int n_samples = 41);

/// The three fitted surrogates plus provenance, serialized together.
struct SurrogateSet {
  QuadraticSurrogate motor;
  QuadraticSurrogate fuelcell;
  BatterySocSurrogate soc;

  std::string to_json() const;
  static SurrogateSet from_json(const std::string& text);
};

}  // namespace hytrain
