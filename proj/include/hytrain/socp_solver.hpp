#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "hytrain/conic_program.hpp"

namespace hytrain {

enum class SolveStatus {
  Optimal,
  OptimalInaccurate,
  PrimalInfeasible,
  DualInfeasible,
  MaxIterations,
  Numerics,
};

const char* to_string(SolveStatus s);
inline bool is_optimal(SolveStatus s) {
  return s == SolveStatus::Optimal || s == SolveStatus::OptimalInaccurate;
}

struct SolverOptions {
  int max_iterations = 200;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double feastol_inacc = 1e-4;
  double abstol_inacc = 5e-5;
  double reltol_inacc = 5e-5;
  double step_gamma = 0.99;  // fraction-to-boundary damping
  double step_min = 1e-6;
  double step_max = 0.9995;
  double sigma_min = 1e-4;
  double sigma_max = 0.999;
  double safeguard = 500.0;  // primal-residual blowup factor triggering recovery

  // Multiple centrality correctors: after the combined direction, up to
  // max_correctors extra backsolves with the same factorization pull
  // complementarity products that fall outside
  // [corr_beta_min, corr_beta_max]*sigma*mu at an enlarged trial step back
  // toward the band. Long steps on problems whose products spread out
  // otherwise collapse into a short-step crawl.
  int max_correctors = 3;
  double corr_alpha_boost = 0.3;  // trial step = min(1, step + boost)
  double corr_beta_min = 0.1;
  double corr_beta_max = 10.0;
  double static_reg = 1e-9;
  double dynamic_eps = 1e-13;
  double dynamic_bump = 1e-7;
  int max_refine = 3;        // iterative refinement steps per KKT solve
  double refine_acc = 1e-12; // stop refining below (1 + ||rhs||) * refine_acc
  double refine_stall = 6.0; // stop refining when error shrinks less than this factor
  int equilibrate_sweeps = 10;  // used by solve_program only; 0 disables
  bool verbose = false;
};

/// Scalar history of one interior-point iteration, kept for diagnostics and
/// for invariant checks in tests.
struct IterRecord {
  int iter;
  double pcost, dcost, gap, pres, dres;
  double tau, kap, mu;
  double step, sigma;
};

struct SolveInfo {
  int iterations = 0;
  double pcost = 0, dcost = 0, gap = 0, pres = 0, dres = 0;
  std::optional<double> relgap;
  double tau = 0, kap = 0;
  int dynamic_reg_bumps = 0;  // summed over all factorizations
  long factor_nnz = 0;
  double solve_seconds = 0;
  std::string message;
  std::vector<IterRecord> trace;
};

/// Conic problem in inequality form:
///   minimize c'x  subject to  Ax = b,  h - Gx in K,
/// where K = R+^{n_nonneg} x SOC(soc_dims[0]) x SOC(soc_dims[1]) x ...
struct SolverProblem {
  Eigen::SparseMatrix<double> A;  // p x n
  Eigen::SparseMatrix<double> G;  // m x n
  Eigen::VectorXd b, h, c;
  int n_nonneg = 0;
  std::vector<int> soc_dims;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_eq() const { return static_cast<int>(b.size()); }
  int num_cone_rows() const { return static_cast<int>(h.size()); }
};

/// Lowers a finalized conic program to inequality form. Nonnegative slices
/// make up the leading orthant; a rotated cone (u, w, t...) maps to the plain
/// second-order cone through the rotation ((u+w)/sqrt2, (u-w)/sqrt2, t...),
/// which is its own inverse.
SolverProblem make_solver_problem(const ConicProgram& prog);

struct SolveResult {
  SolveStatus status = SolveStatus::Numerics;
  Eigen::VectorXd x, y, z, s;  // y: equality duals; z, s: cone dual/slack
  SolveInfo info;
};

/// Homogeneous self-dual embedding solved with a Nesterov-Todd scaled
/// Mehrotra predictor-corrector method. On infeasible problems the returned
/// (y, z) or x hold the normalized certificate described in info.message.
SolveResult solve_socp(const SolverProblem& problem, const SolverOptions& opts);

/// Final KKT quantities of a solution in the problem's own units.
struct KktResiduals {
  double primal_eq;        // ||Ax - b||_inf
  double cone_violation;   // worst violation of h - Gx in K
  double dual_stationarity;  // ||c + A'y + G'z||_inf
  double dual_cone_violation;  // worst violation of z in K
  double comp_gap;         // s'z with s = h - Gx
  double duality_gap;      // |c'x + b'y + h'z|
};
KktResiduals kkt_residuals(const SolverProblem& problem, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& z);

struct ProgramSolution {
  SolveStatus status = SolveStatus::Numerics;
  Eigen::VectorXd x;       // original units
  Eigen::VectorXd y;       // equality duals, original units
  double objective = 0.0;  // original units, constant term included
  SolveInfo info;
};

/// Finalizes and equilibrates `prog` in place (unless already done or
/// disabled), solves it, and maps the solution back to original units.
ProgramSolution solve_program(ConicProgram& prog, const SolverOptions& opts = SolverOptions());

}  // namespace hytrain
