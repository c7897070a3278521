#include <doctest.h>

#include <random>
#include <vector>

#include "hytrain/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace hytrain;
using kernels::Mode;

namespace {

kernels::SparseRowMajor random_sparse(int rows, int cols, double density, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (unif(rng) < density) trip.emplace_back(i, j, gauss(rng));
  kernels::SparseRowMajor a(rows, cols);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

Eigen::VectorXd random_vec(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

}  // namespace

TEST_CASE("kernels: spmv matches Eigen and is mode-invariant") {
#ifdef _OPENMP
  omp_set_num_threads(4);
#endif
  for (unsigned seed : {1u, 2u, 3u}) {
    for (auto [rows, cols, dens] : {std::tuple{40, 60, 0.15}, {1, 7, 0.8}, {300, 10, 0.05}}) {
      kernels::SparseRowMajor a = random_sparse(rows, cols, dens, seed);
      Eigen::VectorXd x = random_vec(cols, seed + 100);

      Eigen::VectorXd ys, yp;
      kernels::spmv(a, x, ys, Mode::Serial);
      kernels::spmv(a, x, yp, Mode::Parallel);
      Eigen::VectorXd ref = a * x;

      REQUIRE(ys.size() == rows);
      for (int i = 0; i < rows; ++i) {
        CHECK(ys[i] == yp[i]);  // exact: same per-row accumulation order
        CHECK(ys[i] == doctest::Approx(ref[i]).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("kernels: spmv_add accumulates in place") {
  kernels::SparseRowMajor a = random_sparse(25, 18, 0.3, 9u);
  Eigen::VectorXd x = random_vec(18, 10u);
  Eigen::VectorXd y0 = random_vec(25, 11u);

  Eigen::VectorXd ys = y0, yp = y0;
  kernels::spmv_add(a, x, -2.5, ys, Mode::Serial);
  kernels::spmv_add(a, x, -2.5, yp, Mode::Parallel);
  Eigen::VectorXd ref = y0 - 2.5 * (a * x);
  for (int i = 0; i < 25; ++i) {
    CHECK(ys[i] == yp[i]);
    CHECK(ys[i] == doctest::Approx(ref[i]).epsilon(1e-13));
  }
}

TEST_CASE("kernels: dot and norm2 are mode-invariant across sizes") {
  // Sizes straddle the chunk boundary so the blocked sum tree is exercised.
  for (int n : {1, 5, 4095, 4096, 4097, 20000}) {
    Eigen::VectorXd a = random_vec(n, 20u + static_cast<unsigned>(n));
    Eigen::VectorXd b = random_vec(n, 21u + static_cast<unsigned>(n));
    const double ds = kernels::dot(a, b, Mode::Serial);
    const double dp = kernels::dot(a, b, Mode::Parallel);
    CHECK(ds == dp);
    CHECK(ds == doctest::Approx(a.dot(b)).epsilon(1e-12));

    const double ns = kernels::norm2(a, Mode::Serial);
    const double np = kernels::norm2(a, Mode::Parallel);
    CHECK(ns == np);
    CHECK(ns == doctest::Approx(a.norm()).epsilon(1e-12));
  }
}

TEST_CASE("kernels: max_step_nonneg") {
  Eigen::VectorXd x(3), dx(3);
  x << 1.0, 2.0, 5.0;
  dx << -1.0, -4.0, 3.0;
  CHECK(kernels::max_step_nonneg(x, dx, 10.0, Mode::Serial) == doctest::Approx(0.5));
  CHECK(kernels::max_step_nonneg(x, dx, 0.2, Mode::Serial) == doctest::Approx(0.2));
  CHECK(kernels::max_step_nonneg(x, dx, 10.0, Mode::Parallel) ==
        kernels::max_step_nonneg(x, dx, 10.0, Mode::Serial));

  Eigen::VectorXd up(2);
  up << 0.5, 1.0;
  CHECK(kernels::max_step_nonneg(x.head(2), up, 7.0, Mode::Serial) == doctest::Approx(7.0));
}

TEST_CASE("kernels: min_over_blocks matches serial loop") {
  auto f = [](int k) { return std::cos(1.7 * k) + 0.01 * k; };
  const double serial = kernels::min_over_blocks(1000, 2.0, f, Mode::Serial);
  const double parallel = kernels::min_over_blocks(1000, 2.0, f, Mode::Parallel);
  CHECK(serial == parallel);
  double ref = 2.0;
  for (int k = 0; k < 1000; ++k) ref = std::min(ref, f(k));
  CHECK(serial == ref);
  CHECK(kernels::min_over_blocks(0, 42.0, f, Mode::Parallel) == 42.0);
}

TEST_CASE("kernels: default mode is restorable") {
  const Mode saved = kernels::default_mode();
  kernels::set_default_mode(Mode::Serial);
  CHECK(kernels::default_mode() == Mode::Serial);
  kernels::set_default_mode(saved);
  CHECK(kernels::default_mode() == saved);
}
