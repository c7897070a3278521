#include "hytrain/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hytrain::kernels {
namespace {

Mode g_default_mode =
#ifdef _OPENMP
    Mode::Parallel;
#else
    Mode::Serial;
#endif

constexpr int kChunk = 4096;

// Per-chunk partial sums combined in fixed chunk order. The chunk interiors
// and the combine order never depend on the thread count, so parallel and
// serial results are bit-identical.
template <class ChunkSum>
double chunked_sum(int n, Mode mode, ChunkSum&& chunk_sum) {
  const int nchunks = n == 0 ? 0 : (n + kChunk - 1) / kChunk;
  std::vector<double> partial(nchunks);
#ifdef _OPENMP
  if (mode == Mode::Parallel) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nchunks; ++k)
      partial[k] = chunk_sum(k * kChunk, std::min(n, (k + 1) * kChunk));
  } else
#else
  (void)mode;
#endif
  {
    for (int k = 0; k < nchunks; ++k)
      partial[k] = chunk_sum(k * kChunk, std::min(n, (k + 1) * kChunk));
  }
  double total = 0.0;
  for (int k = 0; k < nchunks; ++k) total += partial[k];
  return total;
}

}  // namespace

void set_default_mode(Mode m) { g_default_mode = m; }
Mode default_mode() { return g_default_mode; }

void spmv(const SparseRowMajor& A, const Eigen::VectorXd& x, Eigen::VectorXd& y, Mode mode) {
  if (x.size() != A.cols()) throw std::invalid_argument("spmv: size mismatch");
  y.resize(A.rows());
  const int rows = static_cast<int>(A.rows());
  const int* rp = A.outerIndexPtr();
  const int* ci = A.innerIndexPtr();
  const double* vv = A.valuePtr();
  const double* xp = x.data();
  double* yp = y.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (mode == Mode::Parallel)
#else
  (void)mode;
#endif
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) acc += vv[k] * xp[ci[k]];
    yp[i] = acc;
  }
}

void spmv_add(const SparseRowMajor& A, const Eigen::VectorXd& x, double alpha, Eigen::VectorXd& y, Mode mode) {
  if (x.size() != A.cols() || y.size() != A.rows()) throw std::invalid_argument("spmv_add: size mismatch");
  const int rows = static_cast<int>(A.rows());
  const int* rp = A.outerIndexPtr();
  const int* ci = A.innerIndexPtr();
  const double* vv = A.valuePtr();
  const double* xp = x.data();
  double* yp = y.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (mode == Mode::Parallel)
#else
  (void)mode;
#endif
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) acc += vv[k] * xp[ci[k]];
    yp[i] += alpha * acc;
  }
}

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Mode mode) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  const double* ap = a.data();
  const double* bp = b.data();
  return chunked_sum(static_cast<int>(a.size()), mode, [&](int lo, int hi) {
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += ap[i] * bp[i];
    return s;
  });
}

double norm2(const Eigen::VectorXd& a, Mode mode) {
  const double* ap = a.data();
  double s = chunked_sum(static_cast<int>(a.size()), mode, [&](int lo, int hi) {
    double acc = 0.0;
    for (int i = lo; i < hi; ++i) acc += ap[i] * ap[i];
    return acc;
  });
  return std::sqrt(s);
}

double max_step_nonneg(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double t_cap, Mode mode) {
  if (x.size() != dx.size()) throw std::invalid_argument("max_step_nonneg: size mismatch");
  const int n = static_cast<int>(x.size());
  const double* xp = x.data();
  const double* dp = dx.data();
  return min_over_blocks(
      n, t_cap,
      [&](int i) { return dp[i] < 0.0 ? -xp[i] / dp[i] : t_cap; },
      mode);
}

}  // namespace hytrain::kernels
