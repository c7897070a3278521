#include "hytrain/surrogate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace hytrain {

double QuadraticSurrogate::eval(double F, double z) const {
  double zc = std::max(z, 0.0);
  return p00 + p10 * zc + p01 * F + p20 * zc * zc + p11 * F * std::sqrt(zc) + p02 * F * F;
}

double exact_soc_rate(double P, double R_ohm, double U_oc, double Q_Ah) {
  double disc = U_oc * U_oc - 4.0 * P * R_ohm;
  if (disc < 0.0) throw std::runtime_error("exact_soc_rate: power beyond U^2/(4R)");
  double I = 2.0 * P / (U_oc + std::sqrt(disc));
  return I / (3600.0 * Q_Ah);
}

namespace {

// Columns of the quadratic design matrix in coefficient order
// [p00, p10, p01, p20, p11, p02]; z = v^2.
std::array<double, 6> design_row(double F, double v) {
  double z = v * v;
  return {1.0, z, F, z * z, F * v, F * F};
}

struct Sample {
  double F, v, target;
};

// Ridge-regularized least squares with p20 >= 0, p02 >= 0 and optional
// exclusion of p11. The two sign constraints are handled by enumerating the
// four active sets on the 6x6 normal equations; the best feasible candidate
// wins. Deterministic by construction.
QuadraticSurrogate solve_constrained_fit(const std::vector<Sample>& samples, bool allow_p11,
                                         double ridge) {
  Eigen::Matrix<double, 6, 6> N = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> r = Eigen::Matrix<double, 6, 1>::Zero();
  double tt = 0.0;
  for (const auto& s : samples) {
    auto row = design_row(s.F, s.v);
    for (int i = 0; i < 6; ++i) {
      r(i) += row[i] * s.target;
      for (int j = 0; j < 6; ++j) N(i, j) += row[i] * row[j];
    }
    tt += s.target * s.target;
  }
  N.diagonal().array() += ridge;

  std::vector<int> cols = {0, 1, 2, 3, 5};
  if (allow_p11) cols.insert(cols.begin() + 4, 4);

  auto solve_subset = [&](bool clamp20, bool clamp02, Eigen::Matrix<double, 6, 1>& p) {
    std::vector<int> act;
    for (int c : cols) {
      if (clamp20 && c == 3) continue;
      if (clamp02 && c == 5) continue;
      act.push_back(c);
    }
    Eigen::MatrixXd Ns(act.size(), act.size());
    Eigen::VectorXd rs(act.size());
    for (size_t i = 0; i < act.size(); ++i) {
      rs(i) = r(act[i]);
      for (size_t j = 0; j < act.size(); ++j) Ns(i, j) = N(act[i], act[j]);
    }
    Eigen::VectorXd ps = Ns.ldlt().solve(rs);
    p.setZero();
    for (size_t i = 0; i < act.size(); ++i) p(act[i]) = ps(i);
  };

  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::Matrix<double, 6, 1> best = Eigen::Matrix<double, 6, 1>::Zero();
  for (int mask = 0; mask < 4; ++mask) {
    Eigen::Matrix<double, 6, 1> p;
    solve_subset(mask & 1, mask & 2, p);
    if (p(3) < 0.0 || p(5) < 0.0) continue;
    double obj = (p.transpose() * N * p)(0) - 2.0 * r.dot(p) + tt;
    if (obj < best_obj) {
      best_obj = obj;
      best = p;
    }
  }

  QuadraticSurrogate q;
  q.p00 = best(0);
  q.p10 = best(1);
  q.p01 = best(2);
  q.p20 = best(3);
  q.p11 = best(4);
  q.p02 = best(5);

  double se = 0.0;
  for (const auto& s : samples) {
    double diff = q.eval(s.F, s.v * s.v) - s.target;
    se += diff * diff;
  }
  q.fit_rms = tt > 0.0 ? std::sqrt(se / tt) : 0.0;
  return q;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * double(i) / double(n - 1);
  return v;
}

}  // namespace

QuadraticSurrogate fit_motor_surrogate(const MotorEfficiencyMap& map, double f_min, double f_max,
                                       double v_min, double v_max, const FitOptions& opt) {
  if (f_min < map.force_min() - 1e-9 || f_max > map.force_max() + 1e-9 ||
      v_min < map.speed_min() - 1e-9 || v_max > map.speed_max() + 1e-9)
    throw std::runtime_error("motor map does not cover the requested fit box");
  if (!(f_min < f_max && v_min < v_max && v_min > 0.0))
    throw std::runtime_error("fit_motor_surrogate: bad fit box");

  std::vector<Sample> samples;
  samples.reserve(size_t(opt.n_force) * size_t(opt.n_speed));
  for (double F : linspace(f_min, f_max, opt.n_force))
    for (double v : linspace(v_min, v_max, opt.n_speed)) {
      double e = map.eff(F, v);
      double target = F >= 0.0 ? F / e : F * e;
      samples.push_back({F, v, target});
    }
  QuadraticSurrogate q = solve_constrained_fit(samples, opt.allow_p11, opt.ridge);
  q.f_min = f_min;
  q.f_max = f_max;
  q.v_min = v_min;
  q.v_max = v_max;
  return q;
}

QuadraticSurrogate fit_fuelcell_surrogate(const FuelCellCurve& curve, double p_min, double p_max,
                                          double v_min, double v_max, const FitOptions& opt) {
  if (p_min < curve.power_min() - 1e-9 || p_max > curve.power_max() + 1e-9)
    throw std::runtime_error("fuel cell curve does not cover the requested power range");
  if (!(p_min < p_max && v_min < v_max && v_min > 0.0))
    throw std::runtime_error("fit_fuelcell_surrogate: bad fit box");

  std::vector<Sample> samples;
  samples.reserve(size_t(opt.n_force) * size_t(opt.n_speed));
  for (double P : linspace(p_min, p_max, opt.n_force))
    for (double v : linspace(v_min, v_max, opt.n_speed))
      samples.push_back({P / v, v, curve.fuel_power(P) / v});
  QuadraticSurrogate q = solve_constrained_fit(samples, opt.allow_p11, opt.ridge);
  q.f_min = p_min / v_max;
  q.f_max = p_max / v_min;
  q.v_min = v_min;
  q.v_max = v_max;
  return q;
}

BatterySocSurrogate fit_battery_surrogate(double R_ohm, double U_oc, double Q_Ah, double p_min,
                                          double p_max, int n_samples) {
  if (!(U_oc > 0.0) || R_ohm < 0.0 || !(Q_Ah > 0.0))
    throw std::runtime_error("fit_battery_surrogate: bad battery parameters");
  double p_valid = R_ohm > 0.0 ? U_oc * U_oc / (4.0 * R_ohm)
                               : std::numeric_limits<double>::infinity();
  if (p_max > p_valid)
    throw std::runtime_error("fit_battery_surrogate: power range beyond model validity U^2/(4R)");

  // 2x2 normal equations for [alpha, beta] on basis [P^2, P].
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0, tt = 0;
  std::vector<double> Ps = linspace(p_min, p_max, n_samples);
  for (double P : Ps) {
    double t = exact_soc_rate(P, R_ohm, U_oc, Q_Ah);
    double x1 = P * P, x2 = P;
    a11 += x1 * x1;
    a12 += x1 * x2;
    a22 += x2 * x2;
    b1 += x1 * t;
    b2 += x2 * t;
    tt += t * t;
  }
  double det = a11 * a22 - a12 * a12;
  BatterySocSurrogate s;
  if (det > 0.0) {
    s.alpha = (b1 * a22 - b2 * a12) / det;
    s.beta = (a11 * b2 - a12 * b1) / det;
  }
  if (!(s.alpha >= 0.0)) {  // R ~ 0 can push alpha to a tiny negative value
    s.alpha = 0.0;
    s.beta = a22 > 0.0 ? b2 / a22 : 0.0;
  }
  double se = 0.0;
  for (double P : Ps) {
    double diff = s.alpha * P * P + s.beta * P - exact_soc_rate(P, R_ohm, U_oc, Q_Ah);
    se += diff * diff;
  }
  s.fit_rms = tt > 0.0 ? std::sqrt(se / tt) : 0.0;
  s.p_min = p_min;
  s.p_max = p_max;
  s.p_valid_max = p_valid;
  return s;
}

ConvexityReport certify_convexity(const QuadraticSurrogate& q, int n_samples) {
  ConvexityReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (double v : linspace(q.v_min, q.v_max, n_samples)) {
    // 2x2 symmetric eigenvalue, closed form.
    double h11 = 2.0 * q.p10 + 12.0 * q.p20 * v * v;
    double h22 = 2.0 * q.p02;
    double h12 = q.p11;
    double mean = 0.5 * (h11 + h22);
    double rad = std::sqrt(0.25 * (h11 - h22) * (h11 - h22) + h12 * h12);
    double lam = mean - rad;
    if (lam < rep.min_eigenvalue) {
      rep.min_eigenvalue = lam;
      rep.arg_v = v;
      rep.arg_f = 0.0;
    }
  }
  rep.convex = q.p20 >= 0.0 && q.p02 >= 0.0 && rep.min_eigenvalue >= -1e-12;
  return rep;
}

namespace {

nlohmann::json quad_to_json(const QuadraticSurrogate& q) {
  return {{"p00", q.p00}, {"p10", q.p10}, {"p01", q.p01},     {"p20", q.p20},
          {"p11", q.p11}, {"p02", q.p02}, {"f_min", q.f_min}, {"f_max", q.f_max},
          {"v_min", q.v_min}, {"v_max", q.v_max}, {"fit_rms", q.fit_rms}};
}

QuadraticSurrogate quad_from_json(const nlohmann::json& j) {
  QuadraticSurrogate q;
  q.p00 = j.at("p00");
  q.p10 = j.at("p10");
  q.p01 = j.at("p01");
  q.p20 = j.at("p20");
  q.p11 = j.at("p11");
  q.p02 = j.at("p02");
  q.f_min = j.at("f_min");
  q.f_max = j.at("f_max");
  q.v_min = j.at("v_min");
  q.v_max = j.at("v_max");
  q.fit_rms = j.at("fit_rms");
  return q;
}

}  // namespace

std::string SurrogateSet::to_json() const {
  nlohmann::json j;
  j["motor"] = quad_to_json(motor);
  j["fuelcell"] = quad_to_json(fuelcell);
  j["soc"] = {{"alpha", soc.alpha},       {"beta", soc.beta},
              {"p_min", soc.p_min},       {"p_max", soc.p_max},
              {"p_valid_max", soc.p_valid_max}, {"fit_rms", soc.fit_rms}};
  return j.dump(2) + "\n";
}

SurrogateSet SurrogateSet::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SurrogateSet s;
  s.motor = quad_from_json(j.at("motor"));
  s.fuelcell = quad_from_json(j.at("fuelcell"));
  const auto& b = j.at("soc");
  s.soc.alpha = b.at("alpha");
  s.soc.beta = b.at("beta");
  s.soc.p_min = b.at("p_min");
  s.soc.p_max = b.at("p_max");
  s.soc.p_valid_max = b.at("p_valid_max");
  s.soc.fit_rms = b.at("fit_rms");
  return s;
}

}  // namespace hytrain
