#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "hytrain/kkt_ldlt.hpp"

using namespace hytrain;

namespace {

/// Random symmetric quasi-definite matrix [[H, A'], [A, -D]] with H, D SPD.
/// Returns the full dense matrix; callers extract the upper triangle.
Eigen::MatrixXd random_quasi_definite(int n, int p, double density, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::MatrixXd b(n, n), e(p, p), a(p, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = unif(rng) < density ? gauss(rng) : 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) e(i, j) = unif(rng) < density ? gauss(rng) : 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = unif(rng) < density ? gauss(rng) : 0.0;

  Eigen::MatrixXd k(n + p, n + p);
  k.topLeftCorner(n, n) = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  k.bottomRightCorner(p, p) = -(e * e.transpose() + 0.1 * Eigen::MatrixXd::Identity(p, p));
  k.bottomLeftCorner(p, n) = a;
  k.topRightCorner(n, p) = a.transpose();
  return k;
}

Eigen::SparseMatrix<double> upper_csc(const Eigen::MatrixXd& k) {
  const int n = static_cast<int>(k.rows());
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i)
      if (k(i, j) != 0.0) trip.emplace_back(i, j, k(i, j));
  Eigen::SparseMatrix<double> u(n, n);
  u.setFromTriplets(trip.begin(), trip.end());
  u.makeCompressed();
  return u;
}

std::vector<int> kkt_signs(int n, int p) {
  std::vector<int> s(n + p);
  for (int i = 0; i < n + p; ++i) s[i] = i < n ? 1 : -1;
  return s;
}

}  // namespace

TEST_CASE("kkt_ldlt: matches dense solve on random quasi-definite systems") {
  std::mt19937 rng(314159u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto [n, p, density] :
       {std::tuple{5, 3, 0.9}, {20, 10, 0.4}, {60, 25, 0.15}, {120, 40, 0.05}}) {
    Eigen::MatrixXd kd = random_quasi_definite(n, p, density, 1000u + n);
    Eigen::SparseMatrix<double> ku = upper_csc(kd);

    KktLdlt ldlt;
    ldlt.analyze(ku, kkt_signs(n, p));
    ldlt.factor(ku);
    CHECK(ldlt.last_dynamic_bumps() == 0);

    for (int rep = 0; rep < 3; ++rep) {
      Eigen::VectorXd rhs(n + p);
      for (int i = 0; i < n + p; ++i) rhs[i] = gauss(rng);
      Eigen::VectorXd x = ldlt.solve(rhs);
      Eigen::VectorXd ref = kd.fullPivLu().solve(rhs);
      // Static regularization perturbs pivots by ~1e-9, so agreement is to
      // that order, not machine precision.
      CHECK((x - ref).lpNorm<Eigen::Infinity>() <
            1e-6 * std::max(1.0, ref.lpNorm<Eigen::Infinity>()));
      Eigen::VectorXd residual = kd * x - rhs;
      CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-7 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("kkt_ldlt: refactorization reuses the symbolic analysis") {
  const int n = 30, p = 12;
  Eigen::MatrixXd k1 = random_quasi_definite(n, p, 0.3, 77u);
  Eigen::SparseMatrix<double> u1 = upper_csc(k1);

  KktLdlt ldlt;
  ldlt.analyze(u1, kkt_signs(n, p));
  ldlt.factor(u1);
  const long nnz_first = ldlt.factor_nnz();

  // New values on the exact same pattern.
  Eigen::SparseMatrix<double> u2 = u1;
  for (int i = 0; i < u2.nonZeros(); ++i) u2.valuePtr()[i] *= 1.7;
  Eigen::MatrixXd k2 = 1.7 * k1;
  ldlt.factor(u2);
  CHECK(ldlt.factor_nnz() == nnz_first);

  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(n + p, -1.0, 2.0);
  Eigen::VectorXd x = ldlt.solve(rhs);
  Eigen::VectorXd residual = k2 * x - rhs;
  CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("kkt_ldlt: zero pivot column is rescued by regularization") {
  // Second variable appears nowhere: its pivot is exactly the static shift.
  Eigen::SparseMatrix<double> u(3, 3);
  u.insert(0, 0) = 2.0;
  u.insert(0, 2) = 1.0;
  u.makeCompressed();
  KktLdlt ldlt;
  ldlt.analyze(u, {1, 1, -1});
  ldlt.factor(u);
  Eigen::VectorXd rhs(3);
  rhs << 1.0, 0.0, 3.0;
  Eigen::VectorXd x = ldlt.solve(rhs);
  // Rows 0 and 2 solve the invertible 2x2 part: x0 + 0 = 3 is row 2 scaled.
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(x[2] == doctest::Approx(1.0 - 2.0 * 3.0).epsilon(1e-6));
}

TEST_CASE("kkt_ldlt: rejects below-diagonal input") {
  Eigen::SparseMatrix<double> bad(2, 2);
  bad.insert(0, 0) = 1.0;
  bad.insert(1, 0) = 0.5;
  bad.makeCompressed();
  KktLdlt ldlt;
  CHECK_THROWS_AS(ldlt.analyze(bad, {1, -1}), std::invalid_argument);
}

TEST_CASE("kkt_ldlt: factor before analyze throws") {
  Eigen::SparseMatrix<double> u(1, 1);
  u.insert(0, 0) = 1.0;
  u.makeCompressed();
  KktLdlt ldlt;
  CHECK_THROWS_AS(ldlt.factor(u), std::logic_error);
}
