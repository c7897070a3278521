#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "hytrain/maps.hpp"
#include "hytrain/surrogate.hpp"

using namespace hytrain;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * double(i) / double(n - 1);
  return v;
}

// Builds a motor map whose exact draw target F/eta equals t(F, z) at every
// grid node, so a quadratic t is recoverable exactly.
MotorEfficiencyMap map_from_target(const std::vector<double>& fs, const std::vector<double>& vs,
                                   const std::function<double(double, double)>& target) {
  std::vector<double> eff;
  eff.reserve(fs.size() * vs.size());
  for (double F : fs)
    for (double v : vs) eff.push_back(F / target(F, v * v));
  return MotorEfficiencyMap::from_grid(fs, vs, eff);
}

}  // namespace

TEST_CASE("maps: bilinear efficiency interpolation and clamping") {
  MotorEfficiencyMap map = MotorEfficiencyMap::from_grid(
      {-100.0, 100.0}, {1.0, 3.0}, {0.8, 0.9, 0.6, 0.7});
  CHECK(map.eff(-100.0, 1.0) == doctest::Approx(0.8));
  CHECK(map.eff(100.0, 3.0) == doctest::Approx(0.7));
  CHECK(map.eff(0.0, 2.0) == doctest::Approx(0.75));  // center = mean of corners
  CHECK(map.eff(-500.0, 0.1) == doctest::Approx(0.8));  // clamped to the corner
  CHECK(map.eff(500.0, 9.0) == doctest::Approx(0.7));

  // Driving divides by eff, regeneration multiplies.
  CHECK(map.electrical_power(100.0, 3.0) == doctest::Approx(300.0 / 0.7));
  CHECK(map.electrical_power(-100.0, 1.0) == doctest::Approx(-100.0 * 0.8));
}

TEST_CASE("maps: fuel cell curve interpolation") {
  FuelCellCurve fc = FuelCellCurve::from_points({0.0, 100.0, 200.0}, {0.4, 0.6, 0.5});
  CHECK(fc.eff(0.0) == doctest::Approx(0.4));
  CHECK(fc.eff(50.0) == doctest::Approx(0.5));
  CHECK(fc.eff(150.0) == doctest::Approx(0.55));
  CHECK(fc.eff(300.0) == doctest::Approx(0.5));  // clamped
  CHECK(fc.fuel_power(100.0) == doctest::Approx(100.0 / 0.6));
  CHECK(fc.fuel_power(0.0) == doctest::Approx(0.0));
}

TEST_CASE("battery: exact depletion rate against independent algebra") {
  const double R = 0.0217, U = 600.0, Q = 220000.0 / 600.0;  // 366.67 Ah
  // Same physics, different formula: I = (U - sqrt(U^2 - 4 P R)) / (2 R).
  for (double P : {600000.0, 250000.0, 1000.0, -250000.0, -600000.0}) {
    const double I_ref = (U - std::sqrt(U * U - 4.0 * P * R)) / (2.0 * R);
    const double want = I_ref / (3600.0 * Q);
    CHECK(exact_soc_rate(P, R, U, Q) == doctest::Approx(want).epsilon(1e-12));
  }
  // Discharging at 600 kW loses SOC faster than the lossless P/U rate.
  const double lossless = 600000.0 / U / (3600.0 * Q);
  CHECK(exact_soc_rate(600000.0, R, U, Q) > 1.03 * lossless);
  // Charging at -600 kW gains SOC slower than lossless.
  CHECK(exact_soc_rate(-600000.0, R, U, Q) > -0.97 * (600000.0 / U / (3600.0 * Q)));
  // R -> 0 limit collapses to P / (U * 3600 Q).
  CHECK(exact_soc_rate(5e5, 0.0, U, Q) == doctest::Approx(5e5 / U / (3600.0 * Q)).epsilon(1e-12));
  CHECK_THROWS_AS(exact_soc_rate(5e6, R, U, Q), std::runtime_error);
}

TEST_CASE("surrogate: exact recovery of a quadratic motor draw") {
  // Ground truth t(F, z) = 2000 + 1.0 z + 1.2 F + 0.002 z^2 + 2e-5 F^2.
  auto target = [](double F, double z) {
    return 2000.0 + 1.0 * z + 1.2 * F + 0.002 * z * z + 2e-5 * F * F;
  };
  FitOptions opt;  // 33 x 33 samples
  auto fs = linspace(5000.0, 80000.0, opt.n_force);
  auto vs = linspace(5.0, 25.0, opt.n_speed);
  MotorEfficiencyMap map = map_from_target(fs, vs, target);

  QuadraticSurrogate q = fit_motor_surrogate(map, 5000.0, 80000.0, 5.0, 25.0, opt);
  CHECK(q.p00 == doctest::Approx(2000.0).epsilon(1e-6));
  CHECK(q.p10 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(q.p01 == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(q.p20 == doctest::Approx(0.002).epsilon(1e-6));
  CHECK(q.p11 == 0.0);
  CHECK(q.p02 == doctest::Approx(2e-5).epsilon(1e-6));
  CHECK(q.fit_rms < 1e-8);
  CHECK(q.eval(40000.0, 400.0) == doctest::Approx(target(40000.0, 400.0)).epsilon(1e-8));

  ConvexityReport rep = certify_convexity(q);
  CHECK(rep.convex);
  CHECK(rep.min_eigenvalue >= 0.0);
}

TEST_CASE("surrogate: concave-in-z target clamps p20 at zero") {
  // t has negative z^2 curvature; constrained fit must clamp p20 = 0 and
  // refit the rest. Oracle: unconstrained least squares on the reduced basis
  // [1, z, F, F^2] via dense QR, an independent solve path.
  auto target = [](double F, double z) {
    return 5000.0 + 2.0 * z - 0.002 * z * z + 1.5 * F + 1e-6 * F * F;
  };
  FitOptions opt;
  auto fs = linspace(1000.0, 50000.0, opt.n_force);
  auto vs = linspace(5.0, 25.0, opt.n_speed);
  MotorEfficiencyMap map = map_from_target(fs, vs, target);

  QuadraticSurrogate q = fit_motor_surrogate(map, 1000.0, 50000.0, 5.0, 25.0, opt);
  CHECK(q.p20 == 0.0);
  CHECK(q.p11 == 0.0);
  CHECK(q.fit_rms > 1e-6);  // the concave part cannot be matched

  const int ns = opt.n_force * opt.n_speed;
  Eigen::MatrixXd D(ns, 4);
  Eigen::VectorXd t(ns);
  int r = 0;
  for (double F : fs)
    for (double v : vs) {
      const double z = v * v;
      D.row(r) << 1.0, z, F, F * F;
      t[r] = target(F, z);
      ++r;
    }
  Eigen::VectorXd coef = D.colPivHouseholderQr().solve(t);
  CHECK(q.p00 == doctest::Approx(coef[0]).epsilon(1e-6));
  CHECK(q.p10 == doctest::Approx(coef[1]).epsilon(1e-6));
  CHECK(q.p01 == doctest::Approx(coef[2]).epsilon(1e-6));
  CHECK(q.p02 == doctest::Approx(coef[3]).epsilon(1e-6));

  // And the clamp is justified: letting p20 grow from 0 cannot help.
  Eigen::VectorXd resid = D * coef - t;
  double grad_p20 = 0.0;
  r = 0;
  for (double F : fs)
    for (double v : vs) {
      (void)F;
      grad_p20 += 2.0 * resid[r] * std::pow(v, 4);
      ++r;
    }
  CHECK(grad_p20 > 0.0);
}

TEST_CASE("surrogate: non-convex coefficients fail certification") {
  QuadraticSurrogate q;
  q.p10 = 1.0;
  q.p20 = 0.0;
  q.p02 = -1e-7;
  q.v_min = 1.0;
  q.v_max = 25.0;
  CHECK(!certify_convexity(q).convex);

  QuadraticSurrogate q2;
  q2.p10 = -5.0;  // Hessian in v goes negative at low speed
  q2.p20 = 1e-4;
  q2.p02 = 1e-6;
  q2.v_min = 1.0;
  q2.v_max = 25.0;
  ConvexityReport rep = certify_convexity(q2);
  CHECK(!rep.convex);
  CHECK(rep.arg_v < 10.0);
}

TEST_CASE("surrogate: battery quadratic tracks the exact rate") {
  const double R = 0.0217, U = 600.0, Q = 220000.0 / 600.0;
  BatterySocSurrogate s = fit_battery_surrogate(R, U, Q, -600000.0, 600000.0);

  CHECK(s.p_valid_max == doctest::Approx(360000.0 / (4.0 * 0.0217)).epsilon(1e-12));
  CHECK(s.alpha > 0.0);
  CHECK(s.beta > 0.0);
  CHECK(s.fit_rms < 5e-3);

  // Leading-order physics: beta ~ 1/(3600 Q U), alpha ~ R/(3600 Q U^3).
  CHECK(s.beta == doctest::Approx(1.0 / (3600.0 * Q * U)).epsilon(0.05));
  CHECK(s.alpha == doctest::Approx(R / (3600.0 * Q * U * U * U)).epsilon(0.2));

  for (double P : linspace(-600000.0, 600000.0, 7)) {
    const double exact = exact_soc_rate(P, R, U, Q);
    const double scale = std::abs(exact_soc_rate(600000.0, R, U, Q));
    CHECK(std::abs(s.eval(P) - exact) < 5e-3 * scale);
  }

  CHECK_THROWS_AS(fit_battery_surrogate(R, U, Q, -1e6, 5e6), std::runtime_error);
}

TEST_CASE("surrogate: json round trip preserves every field") {
  SurrogateSet set;
  set.motor.p00 = 123.456;
  set.motor.p10 = -0.5;
  set.motor.p20 = 1e-3;
  set.motor.p02 = 1.25e-5;
  set.motor.f_min = -87000;
  set.motor.f_max = 87000;
  set.motor.v_min = 0.1;
  set.motor.v_max = 25;
  set.motor.fit_rms = 0.0123;
  set.fuelcell.p00 = 6480;
  set.fuelcell.p01 = 1.7;
  set.fuelcell.p02 = 8e-7;
  set.soc.alpha = 7.6e-17;
  set.soc.beta = 1.26e-9;
  set.soc.p_min = -600000;
  set.soc.p_max = 600000;
  set.soc.p_valid_max = 4147465.43778802;
  set.soc.fit_rms = 1e-4;

  SurrogateSet back = SurrogateSet::from_json(set.to_json());
  CHECK(back.motor.p00 == set.motor.p00);
  CHECK(back.motor.p10 == set.motor.p10);
  CHECK(back.motor.p20 == set.motor.p20);
  CHECK(back.motor.p02 == set.motor.p02);
  CHECK(back.motor.fit_rms == set.motor.fit_rms);
  CHECK(back.fuelcell.p00 == set.fuelcell.p00);
  CHECK(back.fuelcell.p01 == set.fuelcell.p01);
  CHECK(back.fuelcell.p02 == set.fuelcell.p02);
  CHECK(back.soc.alpha == set.soc.alpha);
  CHECK(back.soc.beta == set.soc.beta);
  CHECK(back.soc.p_valid_max == set.soc.p_valid_max);
}
