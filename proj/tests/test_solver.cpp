#include <doctest.h>

#include <cmath>
#include <random>

#include "hytrain/conic_program.hpp"
#include "hytrain/kernels.hpp"
#include "hytrain/socp_solver.hpp"

using namespace hytrain;

namespace {

SolverProblem lp_lower_bound() {
  // min x  s.t.  x >= 1
  SolverProblem sp;
  sp.A.resize(0, 1);
  sp.b.resize(0);
  sp.c = Eigen::VectorXd::Constant(1, 1.0);
  sp.G.resize(1, 1);
  sp.G.insert(0, 0) = -1.0;
  sp.G.makeCompressed();
  sp.h = Eigen::VectorXd::Constant(1, -1.0);
  sp.n_nonneg = 1;
  return sp;
}

}  // namespace

TEST_CASE("solver: one-variable lower-bounded LP") {
  SolverProblem sp = lp_lower_bound();
  SolveResult r = solve_socp(sp, SolverOptions());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.info.pcost == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.info.gap < 1e-7);
}

TEST_CASE("solver: Euclidean norm minimization hits sqrt(2)") {
  // min t  s.t.  t >= ||(u, v)||,  u = 1, v = 1
  SolverProblem sp;
  sp.A.resize(2, 3);
  sp.A.insert(0, 1) = 1.0;
  sp.A.insert(1, 2) = 1.0;
  sp.A.makeCompressed();
  sp.b = Eigen::VectorXd::Ones(2);
  sp.c = Eigen::VectorXd::Zero(3);
  sp.c[0] = 1.0;
  sp.G.resize(3, 3);
  for (int i = 0; i < 3; ++i) sp.G.insert(i, i) = -1.0;
  sp.G.makeCompressed();
  sp.h = Eigen::VectorXd::Zero(3);
  sp.n_nonneg = 0;
  sp.soc_dims = {3};

  SolveResult r = solve_socp(sp, SolverOptions());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[2] == doctest::Approx(1.0).epsilon(1e-6));

  KktResiduals res = kkt_residuals(sp, r.x, r.y, r.z);
  CHECK(res.primal_eq < 1e-7);
  CHECK(res.cone_violation < 1e-8);
  CHECK(res.dual_cone_violation < 1e-8);
  CHECK(res.dual_stationarity < 1e-7);
  CHECK(res.comp_gap < 1e-7);
}

TEST_CASE("solver: iterate invariants along the trace") {
  SolverProblem sp = lp_lower_bound();
  SolveResult r = solve_socp(sp, SolverOptions());
  REQUIRE(r.info.trace.size() > 1);
  for (const IterRecord& it : r.info.trace) {
    CHECK(it.gap >= -1e-12);  // s and z stay inside their cones
    CHECK(it.tau > 0.0);
    CHECK(it.kap > 0.0);
  }
  CHECK(r.info.trace.back().mu < r.info.trace.front().mu);
}

TEST_CASE("solver: rotated cone via modeling layer") {
  // 2*u*w >= q^2, u = 2, q = 1, minimize w -> w = 1/4.
  ConicProgram prog;
  int u = prog.add_var("u");
  int w = prog.add_var("w");
  int q = prog.add_var("q");
  prog.add_cone(ConeKind::Rsoc, 0, 3);
  int r0 = prog.add_row(2.0);
  prog.add_entry(r0, u, 1.0);
  int r1 = prog.add_row(1.0);
  prog.add_entry(r1, q, 1.0);
  prog.set_objective(w, 1.0);

  ProgramSolution sol = solve_program(prog);
  REQUIRE(is_optimal(sol.status));
  CHECK(sol.objective == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(sol.x[u] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.x[q] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solver: four-dimensional rotated cone") {
  // 2*u*t >= x^2 + y^2 with u=1, x=3, y=4 -> min t = 12.5
  ConicProgram prog;
  prog.add_var("u");
  prog.add_var("t");
  prog.add_var("x");
  prog.add_var("y");
  prog.add_cone(ConeKind::Rsoc, 0, 4);
  int r0 = prog.add_row(1.0);
  prog.add_entry(r0, 0, 1.0);
  int r1 = prog.add_row(3.0);
  prog.add_entry(r1, 2, 1.0);
  int r2 = prog.add_row(4.0);
  prog.add_entry(r2, 3, 1.0);
  prog.set_objective(1, 1.0);

  ProgramSolution sol = solve_program(prog);
  REQUIRE(is_optimal(sol.status));
  CHECK(sol.objective == doctest::Approx(12.5).epsilon(1e-6));
}

TEST_CASE("solver: mixed cone kinds declared out of order") {
  // Layout: [soc3 | nn2 | rsoc3], slices declared rsoc first.
  // min t + w  s.t.  t >= ||(a,b)||, a = 3, b = 4 (t* = 5)
  //                  2*u*w >= d^2, u = 1, d = 2 (w* = 2)
  //                  slack0 = 1, slack1 + slack0 = 3   (feasible padding)
  ConicProgram prog;
  int t = prog.add_var("t");
  int a = prog.add_var("a");
  int b = prog.add_var("b");
  int s0 = prog.add_var("s0");
  int s1 = prog.add_var("s1");
  int u = prog.add_var("u");
  int w = prog.add_var("w");
  int d = prog.add_var("d");
  prog.add_cone(ConeKind::Rsoc, u, 3);
  prog.add_cone(ConeKind::NonNeg, s0, 2);
  prog.add_cone(ConeKind::Soc, t, 3);
  int r;
  r = prog.add_row(3.0);
  prog.add_entry(r, a, 1.0);
  r = prog.add_row(4.0);
  prog.add_entry(r, b, 1.0);
  r = prog.add_row(1.0);
  prog.add_entry(r, u, 1.0);
  r = prog.add_row(2.0);
  prog.add_entry(r, d, 1.0);
  r = prog.add_row(1.0);
  prog.add_entry(r, s0, 1.0);
  r = prog.add_row(3.0);
  prog.add_entry(r, s0, 1.0);
  prog.add_entry(r, s1, 1.0);
  prog.set_objective(t, 1.0);
  prog.set_objective(w, 1.0);

  ProgramSolution sol = solve_program(prog);
  REQUIRE(is_optimal(sol.status));
  CHECK(sol.objective == doctest::Approx(7.0).epsilon(1e-6));
  CHECK(sol.x[t] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(sol.x[w] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.x[s1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("solver: random problems with synthesized optima") {
  // Data is reverse-engineered from a strictly complementary primal-dual pair,
  // so the optimal value c'x* is known without running any solver:
  //   pick x*, s* in K, z* in K with s* o z* = 0, y* free;
  //   h = G x* + s*, b = A x*, c = -G'z* - A'y*.
  std::mt19937 rng(20240517u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 24);
    const int nl = static_cast<int>(rng() % 6);
    const int num_soc = 1 + static_cast<int>(rng() % 4);
    std::vector<int> dims(num_soc);
    int m = nl;
    for (int& dcur : dims) {
      dcur = 2 + static_cast<int>(rng() % 5);
      m += dcur;
    }
    const int p = static_cast<int>(rng() % (n / 2 + 1));

    Eigen::MatrixXd Gd(m, n), Ad(p, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) Gd(i, j) = gauss(rng);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j) Ad(i, j) = gauss(rng);

    Eigen::VectorXd xs(n), ys(p), ss(m), zs(m);
    for (int j = 0; j < n; ++j) xs[j] = gauss(rng);
    for (int i = 0; i < p; ++i) ys[i] = gauss(rng);
    for (int i = 0; i < nl; ++i) {
      const double v = 0.1 + std::abs(gauss(rng));
      if (coin(rng)) {
        ss[i] = v;
        zs[i] = 0.0;
      } else {
        ss[i] = 0.0;
        zs[i] = v;
      }
    }
    int at = nl;
    for (int dcur : dims) {
      const int kind = static_cast<int>(rng() % 3);
      Eigen::VectorXd dir(dcur - 1);
      for (int j = 0; j < dcur - 1; ++j) dir[j] = gauss(rng);
      dir.normalize();
      const double as = 0.2 + std::abs(gauss(rng));
      const double az = 0.2 + std::abs(gauss(rng));
      ss.segment(at, dcur).setZero();
      zs.segment(at, dcur).setZero();
      if (kind == 0) {  // s interior, z = 0
        ss[at] = as * 2.0;
        ss.segment(at + 1, dcur - 1) = as * dir;
      } else if (kind == 1) {  // z interior, s = 0
        zs[at] = az * 2.0;
        zs.segment(at + 1, dcur - 1) = az * dir;
      } else {  // both on the boundary, opposite rays
        ss[at] = as;
        ss.segment(at + 1, dcur - 1) = as * dir;
        zs[at] = az;
        zs.segment(at + 1, dcur - 1) = -az * dir;
      }
      at += dcur;
    }

    SolverProblem sp;
    sp.G = Gd.sparseView();
    sp.G.makeCompressed();
    sp.A = Ad.sparseView();
    sp.A.makeCompressed();
    sp.h = Gd * xs + ss;
    sp.b = Ad * xs;
    sp.c = -Gd.transpose() * zs - Ad.transpose() * ys;
    sp.n_nonneg = nl;
    sp.soc_dims = dims;

    const double expected = sp.c.dot(xs);
    SolveResult r = solve_socp(sp, SolverOptions());
    REQUIRE_MESSAGE(is_optimal(r.status), "trial ", trial, ": ", to_string(r.status));
    const double scale = std::max(1.0, std::abs(expected));
    CHECK_MESSAGE(std::abs(r.info.pcost - expected) / scale < 5e-6, "trial ", trial, ": pcost ",
                  r.info.pcost, " expected ", expected);

    KktResiduals res = kkt_residuals(sp, r.x, r.y, r.z);
    CHECK(res.primal_eq < 1e-5);
    CHECK(res.cone_violation < 1e-6);
    CHECK(res.dual_cone_violation < 1e-6);
    CHECK(res.dual_stationarity < 1e-5);
    ++solved;
  }
  CHECK(solved == 40);
}

TEST_CASE("solver: primal infeasibility certificate") {
  // x >= 1 and x <= 0 cannot both hold.
  SolverProblem sp;
  sp.A.resize(0, 1);
  sp.b.resize(0);
  sp.c = Eigen::VectorXd::Constant(1, 1.0);
  sp.G.resize(2, 1);
  sp.G.insert(0, 0) = -1.0;
  sp.G.insert(1, 0) = 1.0;
  sp.G.makeCompressed();
  sp.h.resize(2);
  sp.h << -1.0, 0.0;
  sp.n_nonneg = 2;

  SolveResult r = solve_socp(sp, SolverOptions());
  REQUIRE(r.status == SolveStatus::PrimalInfeasible);
  // Farkas certificate: z >= 0, G'z ~ 0, h'z = -1.
  CHECK(r.z.minCoeff() > -1e-9);
  CHECK(sp.h.dot(r.z) == doctest::Approx(-1.0).epsilon(1e-6));
  Eigen::VectorXd gtz = sp.G.transpose() * r.z;
  CHECK(gtz.lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("solver: dual infeasibility certificate for unbounded problem") {
  // min -x s.t. x >= 0 is unbounded below.
  SolverProblem sp;
  sp.A.resize(0, 1);
  sp.b.resize(0);
  sp.c = Eigen::VectorXd::Constant(1, -1.0);
  sp.G.resize(1, 1);
  sp.G.insert(0, 0) = -1.0;
  sp.G.makeCompressed();
  sp.h = Eigen::VectorXd::Zero(1);
  sp.n_nonneg = 1;

  SolveResult r = solve_socp(sp, SolverOptions());
  REQUIRE(r.status == SolveStatus::DualInfeasible);
  // Unboundedness ray: c'x = -1, -Gx in cone.
  CHECK(sp.c.dot(r.x) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r.x[0] > 0.0);
}

TEST_CASE("solver: kkt_residuals flags a perturbed point") {
  SolverProblem sp = lp_lower_bound();
  SolveResult r = solve_socp(sp, SolverOptions());
  REQUIRE(r.status == SolveStatus::Optimal);
  KktResiduals clean = kkt_residuals(sp, r.x, r.y, r.z);
  Eigen::VectorXd xbad = r.x;
  xbad[0] -= 1e-3;
  KktResiduals dirty = kkt_residuals(sp, xbad, r.y, r.z);
  CHECK(clean.cone_violation < 1e-8);
  CHECK(dirty.cone_violation > 5e-4);
}

TEST_CASE("solver: repeat solves are bit-identical across kernel modes") {
  std::mt19937 rng(7u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 12, m = 9, p = 3;
  Eigen::MatrixXd Gd(m, n), Ad(p, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) Gd(i, j) = gauss(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) Ad(i, j) = gauss(rng);
  Eigen::VectorXd xs(n);
  for (int j = 0; j < n; ++j) xs[j] = gauss(rng);

  SolverProblem sp;
  sp.G = Gd.sparseView();
  sp.A = Ad.sparseView();
  Eigen::VectorXd ss(m);
  ss.setZero();
  ss[0] = 1.0;
  ss[3] = 2.0;
  ss[4] = 1.0;
  sp.h = Gd * xs + ss;
  sp.b = Ad * xs;
  Eigen::VectorXd zs(m);
  zs.setZero();
  zs[1] = 1.0;
  zs[2] = 0.5;
  zs[6] = 1.0;
  sp.c = -Gd.transpose() * zs;
  sp.n_nonneg = 3;
  sp.soc_dims = {3, 3};

  const kernels::Mode saved = kernels::default_mode();
  kernels::set_default_mode(kernels::Mode::Serial);
  SolveResult serial = solve_socp(sp, SolverOptions());
  kernels::set_default_mode(kernels::Mode::Parallel);
  SolveResult parallel = solve_socp(sp, SolverOptions());
  SolveResult repeat = solve_socp(sp, SolverOptions());
  kernels::set_default_mode(saved);

  REQUIRE(is_optimal(serial.status));
  REQUIRE(serial.status == parallel.status);
  REQUIRE(serial.x.size() == parallel.x.size());
  for (int i = 0; i < serial.x.size(); ++i) {
    CHECK(serial.x[i] == parallel.x[i]);
    CHECK(parallel.x[i] == repeat.x[i]);
  }
  CHECK(serial.info.iterations == parallel.info.iterations);
}

TEST_CASE("solver: equilibration handles badly scaled data") {
  // Same sqrt(2) geometry, but variables and rows scaled by 1e4 / 1e-4.
  ConicProgram prog;
  int t = prog.add_var("t");
  int a = prog.add_var("a");
  int b = prog.add_var("b");
  prog.add_cone(ConeKind::Soc, 0, 3);
  int r0 = prog.add_row(1e4);
  prog.add_entry(r0, a, 1e4);
  int r1 = prog.add_row(1e-4);
  prog.add_entry(r1, b, 1e-4);
  prog.set_objective(t, 1e3);

  ProgramSolution sol = solve_program(prog);
  REQUIRE(is_optimal(sol.status));
  CHECK(sol.objective == doctest::Approx(1e3 * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(sol.x[t] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}
