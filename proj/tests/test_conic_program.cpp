#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hytrain/conic_program.hpp"
#include "hytrain/program_io.hpp"

using namespace hytrain;

namespace {

// Random program with wildly scaled entries and a mix of cone kinds.
ConicProgram make_scaled_program(unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);

  ConicProgram prog;
  prog.add_vars(3, "soc");
  prog.add_vars(2, "slack");
  prog.add_vars(3, "rsoc");
  prog.add_vars(2, "free");
  prog.add_cone(ConeKind::Soc, 0, 3);
  prog.add_cone(ConeKind::NonNeg, 3, 2);
  prog.add_cone(ConeKind::Rsoc, 5, 3);
  for (int r = 0; r < 6; ++r) {
    int row = prog.add_row(gauss(rng) * std::pow(10.0, mag(rng)));
    for (int c = 0; c < 10; ++c)
      if (rng() % 3 == 0) prog.add_entry(row, c, gauss(rng) * std::pow(10.0, mag(rng)));
    prog.add_entry(row, static_cast<int>(rng() % 10), gauss(rng) * std::pow(10.0, mag(rng)));
  }
  for (int c = 0; c < 10; ++c)
    if (rng() % 2 == 0) prog.set_objective(c, gauss(rng) * std::pow(10.0, mag(rng)));
  prog.set_objective(1, 3.0e5);  // ensure a nonzero objective
  prog.set_constant_term(2.5);
  return prog;
}

}  // namespace

TEST_CASE("conic program: incremental build and finalize") {
  ConicProgram prog;
  int x = prog.add_var("x");
  int y = prog.add_var("y");
  int s = prog.add_vars(2, "s");
  CHECK(prog.num_vars() == 4);
  CHECK(prog.names()[2] == "s0");
  CHECK(prog.names()[3] == "s1");

  prog.add_cone(ConeKind::NonNeg, s, 2);
  int r0 = prog.add_row(5.0);
  prog.add_entry(r0, x, 2.0);
  prog.add_entry(r0, x, 1.0);  // duplicates sum
  prog.add_entry(r0, y, -1.0);
  prog.add_entry(r0, s, 0.0);  // exact zeros are dropped
  int r1 = prog.add_row(-1.0);
  prog.add_entry(r1, s + 1, 4.0);
  prog.set_objective(x, 1.0);
  prog.add_constant_term(3.0);

  prog.finalize();
  REQUIRE(prog.finalized());
  const auto& A = prog.matrix();
  CHECK(A.rows() == 2);
  CHECK(A.cols() == 4);
  CHECK(A.nonZeros() == 3);
  CHECK(A.coeff(0, x) == 3.0);
  CHECK(A.coeff(0, y) == -1.0);
  CHECK(A.coeff(1, s + 1) == 4.0);
  CHECK(prog.rhs()[0] == 5.0);
  CHECK(prog.constant_term() == 3.0);

  // in_cones looks only at declared slices.
  Eigen::VectorXd v(4);
  v << -9.0, 1.0, 0.5, 0.0;
  CHECK(prog.in_cones(v));
  v[2] = -1e-6;
  CHECK(!prog.in_cones(v));
}

TEST_CASE("conic program: cone slice validation") {
  SUBCASE("overlap") {
    ConicProgram prog;
    prog.add_vars(5, "v");
    prog.add_cone(ConeKind::Soc, 0, 3);
    prog.add_cone(ConeKind::NonNeg, 2, 2);
    CHECK_THROWS_AS(prog.finalize(), std::invalid_argument);
  }
  SUBCASE("out of range") {
    ConicProgram prog;
    prog.add_vars(3, "v");
    prog.add_cone(ConeKind::Soc, 1, 3);
    CHECK_THROWS_AS(prog.finalize(), std::invalid_argument);
  }
  SUBCASE("rotated cone needs length 3") {
    ConicProgram prog;
    prog.add_vars(4, "v");
    prog.add_cone(ConeKind::Rsoc, 0, 2);
    CHECK_THROWS_AS(prog.finalize(), std::invalid_argument);
  }
  SUBCASE("bad entry coordinates") {
    ConicProgram prog;
    prog.add_var("x");
    int r = prog.add_row(0.0);
    CHECK_THROWS_AS(prog.add_entry(r, 5, 1.0), std::out_of_range);
    CHECK_THROWS_AS(prog.add_entry(7, 0, 1.0), std::out_of_range);
  }
}

TEST_CASE("conic program: in_cones covers all three kinds") {
  ConicProgram prog;
  prog.add_vars(3, "t");   // Soc
  prog.add_vars(3, "r");   // Rsoc
  prog.add_cone(ConeKind::Soc, 0, 3);
  prog.add_cone(ConeKind::Rsoc, 3, 3);
  prog.finalize();

  Eigen::VectorXd v(6);
  v << 5.0, 3.0, 4.0, 1.0, 2.0, 2.0;  // 5 = ||(3,4)||, 2*1*2 = 4 = 2^2
  CHECK(prog.in_cones(v, 1e-12));
  v[0] = 4.999;
  CHECK(!prog.in_cones(v, 1e-9));
  v[0] = 5.0;
  v[3] = -1.0;
  CHECK(!prog.in_cones(v));
}

TEST_CASE("conic program: equilibration compresses the dynamic range") {
  ConicProgram prog = make_scaled_program(42u);
  prog.finalize();
  const Eigen::SparseMatrix<double> a0 = prog.matrix();
  const Eigen::VectorXd b0 = prog.rhs();
  const Eigen::VectorXd c0 = prog.objective();

  prog.equilibrate();
  REQUIRE(prog.equilibrated());
  const auto& a1 = prog.matrix();

  // Row and column infinity norms end up near 1.
  for (int j = 0; j < a1.cols(); ++j) {
    double cmax = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a1, j); it; ++it)
      cmax = std::max(cmax, std::abs(it.value()));
    if (cmax > 0.0) {
      CHECK(cmax < 30.0);
      CHECK(cmax > 1.0 / 30.0);
    }
  }

  // Scaled matrix equals diag(r) A diag(c).
  const auto& rs = prog.row_scale();
  const auto& cs = prog.col_scale();
  for (int j = 0; j < a1.cols(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a1, j); it; ++it)
      CHECK(it.value() ==
            doctest::Approx(a0.coeff(it.row(), j) * rs[it.row()] * cs[j]).epsilon(1e-12));
  for (int i = 0; i < b0.size(); ++i)
    CHECK(prog.rhs()[i] == doctest::Approx(b0[i] * rs[i]).epsilon(1e-12));

  // Cone slices share one scale so membership is preserved exactly.
  CHECK(cs[0] == cs[1]);
  CHECK(cs[1] == cs[2]);
  CHECK(cs[5] == cs[6]);
  CHECK(cs[6] == cs[7]);

  // Objective scaling: c_eq = diag(c) c0 / obj_scale.
  const double os = prog.objective_scale();
  CHECK(os > 0.0);
  for (int j = 0; j < c0.size(); ++j)
    CHECK(prog.objective()[j] * os == doctest::Approx(c0[j] * cs[j]).epsilon(1e-12));

  // unscale maps a scaled-units point back to original units.
  Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
  Eigen::VectorXd xo = prog.unscale_solution(xs);
  for (int j = 0; j < 10; ++j) CHECK(xo[j] == doctest::Approx(cs[j] * xs[j]).epsilon(1e-14));
  const double scaled_obj = prog.objective().dot(xs);
  CHECK(prog.unscaled_objective(scaled_obj) ==
        doctest::Approx(c0.dot(xo) + 2.5).epsilon(1e-10));

  // in_cones agrees before and after scaling for slice-uniform columns.
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(10);
  probe[0] = 2.0;
  probe[1] = 1.0;
  probe[2] = 1.0;
  probe[3] = 0.1;
  probe[4] = 0.1;
  probe[5] = 1.0;
  probe[6] = 1.0;
  probe[7] = 1.0;
  CHECK(prog.in_cones(probe));
  CHECK(prog.in_cones(prog.unscale_solution(probe)));
}

TEST_CASE("conic program: text round trip is byte-stable") {
  ConicProgram p1 = make_scaled_program(7u);
  p1.finalize();
  const std::string t1 = program_to_text(p1);

  ConicProgram p2 = program_from_text(t1);
  const std::string t2 = program_to_text(p2);
  CHECK(t1 == t2);

  REQUIRE(p2.num_vars() == p1.num_vars());
  REQUIRE(p2.num_rows() == p1.num_rows());
  REQUIRE(p2.cones().size() == p1.cones().size());
  for (size_t k = 0; k < p1.cones().size(); ++k) {
    CHECK(p2.cones()[k].kind == p1.cones()[k].kind);
    CHECK(p2.cones()[k].start == p1.cones()[k].start);
    CHECK(p2.cones()[k].len == p1.cones()[k].len);
  }
  CHECK(p2.names() == p1.names());
  CHECK(p2.constant_term() == doctest::Approx(p1.constant_term()).epsilon(1e-11));
  for (int j = 0; j < p1.num_vars(); ++j)
    CHECK(p2.objective()[j] == doctest::Approx(p1.objective()[j]).epsilon(1e-11));
  CHECK((Eigen::MatrixXd(p2.matrix()) - Eigen::MatrixXd(p1.matrix())).lpNorm<Eigen::Infinity>() <
        1e-11 * Eigen::MatrixXd(p1.matrix()).lpNorm<Eigen::Infinity>());
}

TEST_CASE("conic program: file io") {
  namespace fs = std::filesystem;
  ConicProgram p1 = make_scaled_program(13u);
  p1.finalize();
  fs::path path = fs::temp_directory_path() / "prog_io_test.socp";
  write_program(p1, path);
  ConicProgram p2 = read_program(path);
  CHECK(program_to_text(p2) == program_to_text(p1));
  fs::remove(path);

  SUBCASE("export of equilibrated programs is refused") {
    p1.equilibrate();
    CHECK_THROWS_AS(program_to_text(p1), std::logic_error);
  }
  SUBCASE("bad magic") {
    CHECK_THROWS_AS(program_from_text("socp 9\n"), std::runtime_error);
  }
  SUBCASE("truncated body") {
    std::string t = program_to_text(p2);
    t.resize(t.size() / 2);
    CHECK_THROWS_AS(program_from_text(t), std::runtime_error);
  }
}
