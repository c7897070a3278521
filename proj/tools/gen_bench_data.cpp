// Generates the committed benchmark fixtures under data/: the 63 km route,
// synthetic motor-efficiency and fuel-cell maps, default train parameters,
// and three ambient scenarios. Deterministic output, 12-significant-digit
// CSVs, so reruns are byte-identical.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hytrain/io_util.hpp"
#include "hytrain/maps.hpp"
#include "hytrain/route.hpp"
#include "hytrain/train_params.hpp"

namespace {

using namespace hytrain;

// Motor electrical model behind the map: the drive-side per-meter draw is
// quadratic in (F, z), F/eta = c00 + c10 v^2 + c01 F + c20 v^4 + c02 F^2,
// so eta = |F| / (c00 + c10 v^2 + c01 |F| + c20 v^4 + c02 F^2). With c01 > 1
// the efficiency stays strictly inside (0, 1). Regeneration uses the same
// eta, giving the recovery fraction at the DC link.
constexpr double kC00 = 2000.0;
constexpr double kC10 = 8.0;
constexpr double kC01 = 1.05;
constexpr double kC20 = 0.004;
constexpr double kC02 = 2.2e-7;

double motor_eff(double force_n, double speed_mps) {
  const double f = std::abs(force_n);
  const double z = speed_mps * speed_mps;
  return f / (kC00 + kC10 * z + kC01 * f + kC20 * z * z + kC02 * f * f);
}

// Fuel-cell system: hydrogen input power s0 + s1 P + s2 P^2 for net output P.
// Peak efficiency 0.55 near 90 kW, 0.51 at the 24 kW floor, 0.50 at 400 kW.
constexpr double kS0 = 6480.0;
constexpr double kS1 = 1.674;
constexpr double kS2 = 8.0e-7;

double fc_eff(double p_w) { return p_w / (kS0 + kS1 * p_w + kS2 * p_w * p_w); }

MotorEfficiencyMap make_motor_map() {
  const std::vector<double> mag = {1000,  3000,  6000,  10000, 15000, 21000, 28000,
                                   36000, 45000, 55000, 66000, 78000, 87000};
  std::vector<double> force;
  for (auto it = mag.rbegin(); it != mag.rend(); ++it) force.push_back(-*it);
  for (double f : mag) force.push_back(f);
  const std::vector<double> speed = {3,  4,  5,  6.5, 8,  9.5, 11, 13,
                                     15, 17, 19, 21,  23, 25};
  std::vector<double> eff;
  eff.reserve(force.size() * speed.size());
  for (double f : force)
    for (double v : speed) eff.push_back(motor_eff(f, v));
  return MotorEfficiencyMap::from_grid(force, speed, eff);
}

FuelCellCurve make_fc_curve() {
  std::vector<double> power, eff;
  for (int k = 1; k <= 40; ++k) {
    const double p = 10000.0 * k;
    power.push_back(p);
    eff.push_back(fc_eff(p));
  }
  return FuelCellCurve::from_points(power, eff);
}

ScenarioConfig make_scenario(double t_amb_c) {
  ScenarioConfig sc;
  sc.t_amb_c = t_amb_c;
  sc.t_batt0_c = ScenarioConfig::preheated_t_batt0_c(t_amb_c);
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(out_dir);

  const auto route = make_benchmark_route();
  atomic_write_file(out_dir / "benchmark_route.csv", route_to_csv(route));
  atomic_write_file(out_dir / "motor_eff.csv", make_motor_map().to_csv());
  atomic_write_file(out_dir / "fuelcell_eff.csv", make_fc_curve().to_csv());
  atomic_write_file(out_dir / "train_params.json", TrainParameters{}.to_json());
  atomic_write_file(out_dir / "scenario_cold.json", make_scenario(-5.0).to_json());
  atomic_write_file(out_dir / "scenario_mild.json", make_scenario(20.0).to_json());
  atomic_write_file(out_dir / "scenario_hot.json", make_scenario(35.0).to_json());

  std::printf("wrote benchmark fixtures to %s\n", out_dir.string().c_str());
  return 0;
}
