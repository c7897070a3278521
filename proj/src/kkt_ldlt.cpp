#include "hytrain/kkt_ldlt.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/OrderingMethods>

namespace hytrain {

namespace {

// Inverts a permutation given as new2old.
std::vector<int> invert(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (size_t i = 0; i < p.size(); ++i) inv[p[i]] = static_cast<int>(i);
  return inv;
}

}  // namespace

void KktLdlt::build_permuted_pattern(const Eigen::SparseMatrix<double>& k_upper,
                                     const std::vector<int>& new2old) {
  const int n = n_;
  std::vector<int> old2new = invert(new2old);
  const int* cp = k_upper.outerIndexPtr();
  const int* ri = k_upper.innerIndexPtr();
  const long nnz = k_upper.nonZeros();

  kp_colptr_.assign(n + 1, 0);
  std::vector<int> ent_col(nnz);
  for (int j = 0; j < n; ++j) {
    for (int p = cp[j]; p < cp[j + 1]; ++p) {
      int pi = old2new[ri[p]];
      int pj = old2new[j];
      int col = std::max(pi, pj);
      ent_col[p] = col;
      ++kp_colptr_[col + 1];
    }
  }
  for (int j = 0; j < n; ++j) kp_colptr_[j + 1] += kp_colptr_[j];

  kp_rows_.assign(nnz, 0);
  src_to_dst_.assign(nnz, 0);
  std::vector<int> next(kp_colptr_.begin(), kp_colptr_.end() - 1);
  for (int j = 0; j < n; ++j) {
    for (int p = cp[j]; p < cp[j + 1]; ++p) {
      int pi = old2new[ri[p]];
      int pj = old2new[j];
      int slot = next[ent_col[p]]++;
      kp_rows_[slot] = std::min(pi, pj);
      src_to_dst_[p] = slot;
    }
  }
  kp_vals_.assign(nnz, 0.0);
}

long KktLdlt::symbolic(std::vector<int>& parent_out, std::vector<int>& lnz_out) const {
  const int n = n_;
  parent_out.assign(n, -1);
  lnz_out.assign(n, 0);
  std::vector<int> flag(n, -1);
  long total = 0;
  for (int k = 0; k < n; ++k) {
    flag[k] = k;
    for (int p = kp_colptr_[k]; p < kp_colptr_[k + 1]; ++p) {
      int i = kp_rows_[p];
      while (flag[i] != k) {
        if (parent_out[i] == -1) parent_out[i] = k;
        ++lnz_out[i];
        ++total;
        flag[i] = k;
        i = parent_out[i];
      }
    }
  }
  return total;
}

void KktLdlt::analyze(const Eigen::SparseMatrix<double>& k_upper, std::vector<int> signs, const Options& opts) {
  if (k_upper.rows() != k_upper.cols()) throw std::invalid_argument("analyze: matrix must be square");
  if (!k_upper.isCompressed()) throw std::invalid_argument("analyze: matrix must be compressed");
  if (static_cast<int>(signs.size()) != k_upper.rows()) throw std::invalid_argument("analyze: signs size mismatch");
  {
    const int* cp = k_upper.outerIndexPtr();
    const int* ri = k_upper.innerIndexPtr();
    for (int j = 0; j < k_upper.cols(); ++j)
      for (int p = cp[j]; p < cp[j + 1]; ++p)
        if (ri[p] > j) throw std::invalid_argument("analyze: entries below the diagonal");
  }

  opts_ = opts;
  n_ = static_cast<int>(k_upper.rows());

  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  amd(k_upper, perm);
  std::vector<int> cand(perm.indices().data(), perm.indices().data() + n_);

  // The AMD functor's output convention is easy to hold backwards; fill size
  // settles it. Run the cheap symbolic pass for both orientations and keep
  // the one producing the sparser factor.
  std::vector<int> parent_a, lnz_a, parent_b, lnz_b;
  build_permuted_pattern(k_upper, cand);
  long fill_a = symbolic(parent_a, lnz_a);
  std::vector<int> cand_inv = invert(cand);
  build_permuted_pattern(k_upper, cand_inv);
  long fill_b = symbolic(parent_b, lnz_b);

  std::vector<int>* lnz;
  if (fill_a <= fill_b) {
    new2old_ = cand;
    build_permuted_pattern(k_upper, new2old_);
    parent_ = std::move(parent_a);
    lnz = &lnz_a;
  } else {
    new2old_ = std::move(cand_inv);
    parent_ = std::move(parent_b);
    lnz = &lnz_b;
  }
  old2new_ = invert(new2old_);
  signs_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    int s = signs[new2old_[i]];
    if (s != 1 && s != -1) throw std::invalid_argument("analyze: signs must be +1 or -1");
    signs_[i] = s;
  }

  l_colptr_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) l_colptr_[j + 1] = l_colptr_[j] + (*lnz)[j];
  l_rows_.assign(l_colptr_[n_], 0);
  l_vals_.assign(l_colptr_[n_], 0.0);
  l_nz_.assign(n_, 0);
  d_.assign(n_, 0.0);
  dinv_.assign(n_, 0.0);
  factored_ = false;
}

void KktLdlt::factor(const Eigen::SparseMatrix<double>& k_upper) {
  if (!analyzed()) throw std::logic_error("factor: analyze() first");
  if (k_upper.nonZeros() != static_cast<long>(src_to_dst_.size()))
    throw std::invalid_argument("factor: pattern changed since analyze()");
  const double* vals = k_upper.valuePtr();
  for (size_t p = 0; p < src_to_dst_.size(); ++p) kp_vals_[src_to_dst_[p]] = vals[p];

  const int n = n_;
  std::fill(l_nz_.begin(), l_nz_.end(), 0);
  dynamic_bumps_ = 0;

  std::vector<double> y(n, 0.0);
  std::vector<int> pattern(n), flag(n, -1), stack(n);
  for (int k = 0; k < n; ++k) {
    int top = n;
    flag[k] = k;
    double dk = signs_[k] * opts_.static_reg;
    for (int p = kp_colptr_[k]; p < kp_colptr_[k + 1]; ++p) {
      int i = kp_rows_[p];
      if (i == k) {
        dk += kp_vals_[p];
        continue;
      }
      y[i] += kp_vals_[p];
      int len = 0;
      while (flag[i] != k) {
        stack[len++] = i;
        flag[i] = k;
        i = parent_[i];
      }
      while (len > 0) pattern[--top] = stack[--len];
    }
    for (int s = top; s < n; ++s) {
      const int i = pattern[s];
      const double yi = y[i];
      y[i] = 0.0;
      const int pend = l_colptr_[i] + l_nz_[i];
      for (int p = l_colptr_[i]; p < pend; ++p) y[l_rows_[p]] -= l_vals_[p] * yi;
      const double lki = yi * dinv_[i];
      dk -= lki * yi;
      l_rows_[pend] = k;
      l_vals_[pend] = lki;
      ++l_nz_[i];
    }
    if (std::abs(dk) < opts_.dynamic_eps) {
      dk = signs_[k] * opts_.dynamic_bump;
      ++dynamic_bumps_;
    }
    d_[k] = dk;
    dinv_[k] = 1.0 / dk;
  }
  factored_ = true;
}

Eigen::VectorXd KktLdlt::solve(const Eigen::VectorXd& rhs) const {
  if (!factored_) throw std::logic_error("solve: factor() first");
  if (rhs.size() != n_) throw std::invalid_argument("solve: size mismatch");
  const int n = n_;
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rhs[new2old_[i]];
  for (int j = 0; j < n; ++j) {
    const double zj = z[j];
    if (zj == 0.0) continue;
    for (int p = l_colptr_[j]; p < l_colptr_[j + 1]; ++p) z[l_rows_[p]] -= l_vals_[p] * zj;
  }
  for (int j = 0; j < n; ++j) z[j] *= dinv_[j];
  for (int j = n - 1; j >= 0; --j) {
    double zj = z[j];
    for (int p = l_colptr_[j]; p < l_colptr_[j + 1]; ++p) zj -= l_vals_[p] * z[l_rows_[p]];
    z[j] = zj;
  }
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[new2old_[i]] = z[i];
  return x;
}

}  // namespace hytrain
