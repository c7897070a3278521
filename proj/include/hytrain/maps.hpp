#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hytrain {

/// Rectangular motor efficiency map sampled over force x speed. Efficiency is
/// the usual traction convention: eta = mechanical/electrical when driving
/// (F > 0) and electrical/mechanical when regenerating (F < 0), always in
/// (0, 1]. CSV columns: force_n,speed_mps,eff.
class MotorEfficiencyMap {
 public:
  static MotorEfficiencyMap load(const std::filesystem::path& path);
  static MotorEfficiencyMap from_grid(std::vector<double> force_axis,
                                      std::vector<double> speed_axis,
                                      std::vector<double> eff_row_major);

  double eff(double force_n, double speed_mps) const;  // bilinear, clamped at edges

  /// Electrical power drawn at the DC link for mechanical operating point
  /// (F, v): F*v/eta when driving, F*v*eta when regenerating.
  double electrical_power(double force_n, double speed_mps) const;

  double force_min() const { return force_.front(); }
  double force_max() const { return force_.back(); }
  double speed_min() const { return speed_.front(); }
  double speed_max() const { return speed_.back(); }

  std::string to_csv() const;

 private:
  std::vector<double> force_;  // strictly increasing
  std::vector<double> speed_;  // strictly increasing, positive
  std::vector<double> eff_;    // force-major: eff_[i*speed_.size()+j]
};

/// Fuel-cell system efficiency curve over net electrical output power.
/// CSV columns: power_w,eff. Power must increase strictly and efficiency stay
/// in (0, 1]. fuel_power(P) = P / eta(P) is the hydrogen input power.
class FuelCellCurve {
 public:
  static FuelCellCurve load(const std::filesystem::path& path);
  static FuelCellCurve from_points(std::vector<double> power_w, std::vector<double> eff);

  double eff(double power_w) const;         // linear interpolation, clamped
  double fuel_power(double power_w) const;  // P / eff(P); P must be >= 0

  double power_min() const { return power_.front(); }
  double power_max() const { return power_.back(); }

  std::string to_csv() const;

 private:
  std::vector<double> power_;
  std::vector<double> eff_;
};

}  // namespace hytrain
