#pragma once

#include <algorithm>

#include <Eigen/Sparse>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hytrain::kernels {

/// Execution mode for the hot loops. Parallel falls back to serial when the
/// build has no OpenMP. Every parallel kernel is bit-identical to its serial
/// reference for any thread count: sums use a fixed chunk tree and min
/// reductions are order-independent.
enum class Mode { Serial, Parallel };

void set_default_mode(Mode m);
Mode default_mode();

using SparseRowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// y = A x. Row-parallel; each row's dot product stays sequential.
void spmv(const SparseRowMajor& A, const Eigen::VectorXd& x, Eigen::VectorXd& y, Mode mode);
inline void spmv(const SparseRowMajor& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  spmv(A, x, y, default_mode());
}

/// y += alpha * A x.
void spmv_add(const SparseRowMajor& A, const Eigen::VectorXd& x, double alpha, Eigen::VectorXd& y, Mode mode);
inline void spmv_add(const SparseRowMajor& A, const Eigen::VectorXd& x, double alpha, Eigen::VectorXd& y) {
  spmv_add(A, x, alpha, y, default_mode());
}

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Mode mode);
inline double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return dot(a, b, default_mode()); }

double norm2(const Eigen::VectorXd& a, Mode mode);
inline double norm2(const Eigen::VectorXd& a) { return norm2(a, default_mode()); }

/// Largest t in [0, t_cap] with x + t*dx >= 0 elementwise.
double max_step_nonneg(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double t_cap, Mode mode);
inline double max_step_nonneg(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double t_cap) {
  return max_step_nonneg(x, dx, t_cap, default_mode());
}

/// min over k in [0, nblocks) of f(k), floored at `init`. Exact min is
/// order-independent, so the parallel result matches serial bit for bit.
template <class F>
double min_over_blocks(int nblocks, double init, F&& f, Mode mode) {
  double best = init;
#ifdef _OPENMP
  if (mode == Mode::Parallel) {
#pragma omp parallel for reduction(min : best) schedule(static)
    for (int k = 0; k < nblocks; ++k) best = std::min(best, f(k));
    return best;
  }
#else
  (void)mode;
#endif
  for (int k = 0; k < nblocks; ++k) best = std::min(best, f(k));
  return best;
}

}  // namespace hytrain::kernels
