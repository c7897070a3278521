#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace hytrain {

enum class ConeKind { NonNeg, Soc, Rsoc };

/// Contiguous column slice [start, start+len) constrained to a cone.
/// NonNeg: every member >= 0 (len >= 1).
/// Soc: x0 >= ||x1..|| (len >= 2).
/// Rsoc: 2*x0*x1 >= ||x2..||^2 with x0, x1 >= 0 (len >= 3).
struct ConeSlice {
  ConeKind kind;
  int start;
  int len;
};

/// Sparse conic program
///     minimize    c'x + constant_term
///     subject to  A x = b,  cone slices as declared,  other columns free.
///
/// Built incrementally in triplet form, then finalized to CSC. Equilibration
/// rescales A, b, c in place and records the diagonal scalings so solutions
/// and duals can be mapped back to original units.
class ConicProgram {
 public:
  int num_vars() const { return n_; }
  int num_rows() const { return static_cast<int>(b_.size()); }

  int add_var(std::string name);
  /// Adds k variables named <prefix>0 .. <prefix>{k-1}; returns first index.
  int add_vars(int k, const std::string& prefix);
  void add_cone(ConeKind kind, int start, int len);
  /// Adds an equality row with the given right-hand side; returns row index.
  int add_row(double rhs);
  void add_entry(int row, int col, double value);
  void set_objective(int col, double value);
  void set_constant_term(double v) { constant_term_ = v; }
  void add_constant_term(double v) { constant_term_ += v; }

  /// Builds the CSC matrix (summing duplicate entries) and validates cone
  /// slices: in range, non-overlapping, minimum lengths. Idempotent calls
  /// after further add_entry/add_row pick up the new data.
  void finalize();
  bool finalized() const { return finalized_; }

  const Eigen::SparseMatrix<double>& matrix() const;
  const Eigen::VectorXd& rhs() const { return b_vec_; }
  const Eigen::VectorXd& objective() const { return c_vec_; }
  const std::vector<ConeSlice>& cones() const { return cones_; }
  const std::vector<std::string>& names() const { return names_; }
  double constant_term() const { return constant_term_; }

  /// Ruiz equilibration (infinity norm), in place. Columns belonging to one
  /// Soc/Rsoc slice receive a single shared scale (the geometric mean of
  /// their individual candidates) so cone membership is preserved exactly.
  /// The objective is additionally normalized by its max coefficient.
  void equilibrate(int sweeps = 10);
  bool equilibrated() const { return equilibrated_; }
  const Eigen::VectorXd& col_scale() const { return col_scale_; }
  const Eigen::VectorXd& row_scale() const { return row_scale_; }
  double objective_scale() const { return obj_scale_; }

  /// Maps a solution of the (possibly equilibrated) program back to original
  /// units: x_orig = diag(col_scale) * x.
  Eigen::VectorXd unscale_solution(const Eigen::VectorXd& x) const;
  /// Maps equality duals back: y_orig = obj_scale * diag(row_scale) * y.
  Eigen::VectorXd unscale_duals(const Eigen::VectorXd& y) const;
  /// Original-units objective value for a scaled solution.
  double unscaled_objective(double scaled_obj) const { return scaled_obj * obj_scale_ + constant_term_; }

  /// True if x (original units) satisfies every declared cone to tolerance.
  bool in_cones(const Eigen::VectorXd& x, double tol = 1e-9) const;

 private:
  int n_ = 0;
  std::vector<std::string> names_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> b_;
  std::vector<double> c_dense_;
  std::vector<ConeSlice> cones_;
  double constant_term_ = 0.0;

  bool finalized_ = false;
  Eigen::SparseMatrix<double> A_;
  Eigen::VectorXd b_vec_, c_vec_;

  bool equilibrated_ = false;
  Eigen::VectorXd col_scale_, row_scale_;
  double obj_scale_ = 1.0;
};

}  // namespace hytrain
