#include "hytrain/maps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hytrain/io_util.hpp"

namespace hytrain {

namespace {

size_t bracket(const std::vector<double>& axis, double x) {
  // Index i with axis[i] <= x < axis[i+1], clamped to valid cells.
  if (x <= axis.front()) return 0;
  if (x >= axis.back()) return axis.size() - 2;
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  return size_t(it - axis.begin()) - 1;
}

void check_strictly_increasing(const std::vector<double>& axis, const std::string& what) {
  for (size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1]))
      throw std::runtime_error(what + " axis must increase strictly");
}

}  // namespace

MotorEfficiencyMap MotorEfficiencyMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open motor map: " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{
                                     "force_n", "speed_mps", "eff"})
    throw std::runtime_error(path.string() + ": header must be force_n,speed_mps,eff");

  std::set<double> fset, vset;
  std::map<std::pair<double, double>, double> cells;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    const std::string ctx = path.string() + " line " + std::to_string(lineno);
    if (f.size() != 3) throw std::runtime_error(ctx + ": expected 3 fields");
    double F = parse_double(f[0], ctx), v = parse_double(f[1], ctx), e = parse_double(f[2], ctx);
    fset.insert(F);
    vset.insert(v);
    if (!cells.emplace(std::make_pair(F, v), e).second)
      throw std::runtime_error(ctx + ": duplicate grid cell");
  }
  std::vector<double> force(fset.begin(), fset.end());
  std::vector<double> speed(vset.begin(), vset.end());
  if (force.size() < 2 || speed.size() < 2)
    throw std::runtime_error(path.string() + ": need at least a 2x2 grid");
  if (cells.size() != force.size() * speed.size())
    throw std::runtime_error(path.string() + ": grid is not rectangular (" +
                             std::to_string(cells.size()) + " cells for " +
                             std::to_string(force.size()) + "x" + std::to_string(speed.size()) +
                             " axes)");
  std::vector<double> eff(force.size() * speed.size());
  for (size_t i = 0; i < force.size(); ++i)
    for (size_t j = 0; j < speed.size(); ++j)
      eff[i * speed.size() + j] = cells.at({force[i], speed[j]});
  return from_grid(std::move(force), std::move(speed), std::move(eff));
}

MotorEfficiencyMap MotorEfficiencyMap::from_grid(std::vector<double> force_axis,
                                                 std::vector<double> speed_axis,
                                                 std::vector<double> eff_row_major) {
  MotorEfficiencyMap m;
  m.force_ = std::move(force_axis);
  m.speed_ = std::move(speed_axis);
  m.eff_ = std::move(eff_row_major);
  check_strictly_increasing(m.force_, "motor map force");
  check_strictly_increasing(m.speed_, "motor map speed");
  if (m.speed_.front() <= 0.0) throw std::runtime_error("motor map speeds must be positive");
  if (m.eff_.size() != m.force_.size() * m.speed_.size())
    throw std::runtime_error("motor map grid size mismatch");
  for (double e : m.eff_)
    if (!(e > 0.0 && e <= 1.0))
      throw std::runtime_error("motor map efficiency out of (0, 1]");
  return m;
}

double MotorEfficiencyMap::eff(double force_n, double speed_mps) const {
  size_t i = bracket(force_, force_n);
  size_t j = bracket(speed_, speed_mps);
  double fx = std::clamp((force_n - force_[i]) / (force_[i + 1] - force_[i]), 0.0, 1.0);
  double fy = std::clamp((speed_mps - speed_[j]) / (speed_[j + 1] - speed_[j]), 0.0, 1.0);
  const size_t ns = speed_.size();
  double e00 = eff_[i * ns + j], e01 = eff_[i * ns + j + 1];
  double e10 = eff_[(i + 1) * ns + j], e11 = eff_[(i + 1) * ns + j + 1];
  return (1 - fx) * ((1 - fy) * e00 + fy * e01) + fx * ((1 - fy) * e10 + fy * e11);
}

double MotorEfficiencyMap::electrical_power(double force_n, double speed_mps) const {
  double mech = force_n * speed_mps;
  double e = eff(force_n, speed_mps);
  return force_n >= 0.0 ? mech / e : mech * e;
}

std::string MotorEfficiencyMap::to_csv() const {
  std::ostringstream out;
  out << "force_n,speed_mps,eff\n";
  for (size_t i = 0; i < force_.size(); ++i)
    for (size_t j = 0; j < speed_.size(); ++j)
      out << format_sig12(force_[i]) << ',' << format_sig12(speed_[j]) << ','
          << format_sig12(eff_[i * speed_.size() + j]) << '\n';
  return out.str();
}

FuelCellCurve FuelCellCurve::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fuel cell curve: " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"power_w", "eff"})
    throw std::runtime_error(path.string() + ": header must be power_w,eff");
  std::vector<double> P, E;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    const std::string ctx = path.string() + " line " + std::to_string(lineno);
    if (f.size() != 2) throw std::runtime_error(ctx + ": expected 2 fields");
    P.push_back(parse_double(f[0], ctx));
    E.push_back(parse_double(f[1], ctx));
  }
  return from_points(std::move(P), std::move(E));
}

FuelCellCurve FuelCellCurve::from_points(std::vector<double> power_w, std::vector<double> eff) {
  FuelCellCurve c;
  c.power_ = std::move(power_w);
  c.eff_ = std::move(eff);
  if (c.power_.size() < 2) throw std::runtime_error("fuel cell curve needs >= 2 points");
  check_strictly_increasing(c.power_, "fuel cell power");
  if (c.power_.front() < 0.0) throw std::runtime_error("fuel cell powers must be nonnegative");
  for (double e : c.eff_)
    if (!(e > 0.0 && e <= 1.0))
      throw std::runtime_error("fuel cell efficiency out of (0, 1]");
  if (c.eff_.size() != c.power_.size())
    throw std::runtime_error("fuel cell curve size mismatch");
  return c;
}

double FuelCellCurve::eff(double power_w) const {
  if (power_w <= power_.front()) return eff_.front();
  if (power_w >= power_.back()) return eff_.back();
  size_t i = bracket(power_, power_w);
  double w = (power_w - power_[i]) / (power_[i + 1] - power_[i]);
  return eff_[i] + w * (eff_[i + 1] - eff_[i]);
}

double FuelCellCurve::fuel_power(double power_w) const {
  if (power_w < 0.0) throw std::runtime_error("fuel_power: negative output power");
  return power_w / eff(power_w);
}

std::string FuelCellCurve::to_csv() const {
  std::ostringstream out;
  out << "power_w,eff\n";
  for (size_t i = 0; i < power_.size(); ++i)
    out << format_sig12(power_[i]) << ',' << format_sig12(eff_[i]) << '\n';
  return out.str();
}

}  // namespace hytrain
