#pragma once

#include <vector>

#include <Eigen/Sparse>

namespace hytrain {

/// Sparse LDL^T factorization for symmetric quasi-definite KKT matrices.
///
/// Up-looking factorization over an approximate-minimum-degree permutation.
/// Quasi-definite systems admit LDL^T with diagonal D for any symmetric
/// permutation; regularization keeps that true numerically:
///   - a static shift sign[i] * static_reg is added to every diagonal entry,
///   - any pivot with |d| < dynamic_eps is replaced by sign[i] * dynamic_bump.
/// Callers that need the unshifted solution run iterative refinement against
/// the original matrix on top of solve().
class KktLdlt {
 public:
  struct Options {
    double static_reg = 1e-9;
    double dynamic_eps = 1e-13;
    double dynamic_bump = 1e-7;
  };

  /// Symbolic phase. `k_upper` must be square, compressed, column-major, with
  /// only upper-triangular entries. `signs[i]` in {+1, -1} gives the expected
  /// inertia sign of row i. The pattern is fixed afterwards; factor() accepts
  /// matrices with this exact pattern and new values.
  void analyze(const Eigen::SparseMatrix<double>& k_upper, std::vector<int> signs, const Options& opts);
  void analyze(const Eigen::SparseMatrix<double>& k_upper, std::vector<int> signs) {
    analyze(k_upper, std::move(signs), Options());
  }

  /// Numeric phase; reusable for any values on the analyzed pattern.
  void factor(const Eigen::SparseMatrix<double>& k_upper);

  /// Solves K x = rhs with the factored (regularized) matrix.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int dim() const { return n_; }
  long factor_nnz() const { return static_cast<long>(l_rows_.size()); }
  int last_dynamic_bumps() const { return dynamic_bumps_; }
  bool analyzed() const { return n_ > 0; }

 private:
  void build_permuted_pattern(const Eigen::SparseMatrix<double>& k_upper, const std::vector<int>& new2old);
  long symbolic(std::vector<int>& parent_out, std::vector<int>& lnz_out) const;

  Options opts_;
  int n_ = 0;
  std::vector<int> signs_;          // permuted order
  std::vector<int> new2old_, old2new_;
  std::vector<int> src_to_dst_;     // source nonzero slot -> permuted slot

  // Permuted upper-triangular pattern (rows within a column unsorted).
  std::vector<int> kp_colptr_, kp_rows_;
  std::vector<double> kp_vals_;

  // Elimination tree and factor storage, L unit lower triangular by columns.
  std::vector<int> parent_, l_colptr_, l_nz_;
  std::vector<int> l_rows_;
  std::vector<double> l_vals_;
  std::vector<double> d_, dinv_;
  int dynamic_bumps_ = 0;
  bool factored_ = false;
};

}  // namespace hytrain
