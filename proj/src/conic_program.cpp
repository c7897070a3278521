#include "hytrain/conic_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hytrain {

int ConicProgram::add_var(std::string name) {
  names_.push_back(std::move(name));
  c_dense_.push_back(0.0);
  finalized_ = false;
  return n_++;
}

int ConicProgram::add_vars(int k, const std::string& prefix) {
  int first = n_;
  for (int i = 0; i < k; ++i) add_var(prefix + std::to_string(i));
  return first;
}

void ConicProgram::add_cone(ConeKind kind, int start, int len) {
  cones_.push_back({kind, start, len});
  finalized_ = false;
}

int ConicProgram::add_row(double rhs) {
  b_.push_back(rhs);
  finalized_ = false;
  return static_cast<int>(b_.size()) - 1;
}

void ConicProgram::add_entry(int row, int col, double value) {
  if (row < 0 || row >= static_cast<int>(b_.size())) throw std::out_of_range("add_entry: bad row");
  if (col < 0 || col >= n_) throw std::out_of_range("add_entry: bad col");
  if (value == 0.0) return;
  triplets_.emplace_back(row, col, value);
  finalized_ = false;
}

void ConicProgram::set_objective(int col, double value) {
  if (col < 0 || col >= n_) throw std::out_of_range("set_objective: bad col");
  c_dense_[col] = value;
  finalized_ = false;
}

void ConicProgram::finalize() {
  if (equilibrated_) throw std::logic_error("finalize: program already equilibrated");
  const int p = static_cast<int>(b_.size());
  A_.resize(p, n_);
  A_.setFromTriplets(triplets_.begin(), triplets_.end());
  A_.makeCompressed();
  b_vec_ = Eigen::Map<const Eigen::VectorXd>(b_.data(), p);
  c_vec_ = Eigen::Map<const Eigen::VectorXd>(c_dense_.data(), n_);

  std::vector<ConeSlice> sorted = cones_;
  std::sort(sorted.begin(), sorted.end(), [](const ConeSlice& a, const ConeSlice& b) { return a.start < b.start; });
  int prev_end = 0;
  for (const ConeSlice& s : sorted) {
    int min_len = s.kind == ConeKind::Rsoc ? 3 : (s.kind == ConeKind::Soc ? 2 : 1);
    if (s.len < min_len) throw std::invalid_argument("finalize: cone slice too short");
    if (s.start < prev_end) throw std::invalid_argument("finalize: overlapping cone slices");
    if (s.start + s.len > n_) throw std::invalid_argument("finalize: cone slice out of range");
    prev_end = s.start + s.len;
  }
  cones_ = std::move(sorted);
  finalized_ = true;
}

const Eigen::SparseMatrix<double>& ConicProgram::matrix() const {
  if (!finalized_) throw std::logic_error("matrix: call finalize() first");
  return A_;
}

void ConicProgram::equilibrate(int sweeps) {
  if (!finalized_) throw std::logic_error("equilibrate: call finalize() first");
  if (equilibrated_) throw std::logic_error("equilibrate: already applied");
  const int p = num_rows();
  const int n = n_;
  row_scale_ = Eigen::VectorXd::Ones(p);
  col_scale_ = Eigen::VectorXd::Ones(n);

  // Sup-norm (Ruiz) sweeps: divide each row and column by the square root of
  // its largest scaled entry, iterated to drive row and column maxima
  // toward 1. Cone columns cannot move independently: SOC u >= ||t|| only
  // allows one uniform scale across the slice, RSOC 2uw >= ||t||^2 allows
  // (u, w, t) -> (e^a u, e^b w, e^{(a+b)/2} t). Cone slices therefore take
  // the least-squares fit of the per-member targets inside that group.
  Eigen::VectorXd row_max(p), col_max(n);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    row_max.setZero();
    col_max.setZero();
    for (int j = 0; j < A_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
        double v = std::abs(it.value()) * row_scale_[it.row()] * col_scale_[j];
        row_max[it.row()] = std::max(row_max[it.row()], v);
        col_max[j] = std::max(col_max[j], v);
      }
    }
    for (const ConeSlice& s : cones_) {
      if (s.kind == ConeKind::NonNeg) continue;
      if (s.kind == ConeKind::Soc) {
        double log_sum = 0.0;
        int c2 = 0;
        for (int j = s.start; j < s.start + s.len; ++j)
          if (col_max[j] > 0) {
            log_sum += std::log(col_max[j]);
            ++c2;
          }
        double g = c2 > 0 ? std::exp(log_sum / c2) : 0.0;
        for (int j = s.start; j < s.start + s.len; ++j) col_max[j] = g;
        continue;
      }
      // RSOC group fit on the member maxima, same parameterization as above.
      double mu = col_max[s.start], mw = col_max[s.start + 1];
      double lt = 0.0;
      int ct = 0;
      for (int j = s.start + 2; j < s.start + s.len; ++j)
        if (col_max[j] > 0) {
          lt += std::log(col_max[j]);
          ++ct;
        }
      double su = mu > 0 ? std::log(mu) : 0.0, nu = mu > 0 ? 1.0 : 0.0;
      double sw = mw > 0 ? std::log(mw) : 0.0, nw = mw > 0 ? 1.0 : 0.0;
      double st = lt, nt = ct;
      double a11 = nu + 0.25 * nt, a22 = nw + 0.25 * nt, a12 = 0.25 * nt;
      double r1 = -(su + 0.5 * st), r2 = -(sw + 0.5 * st);
      double det = a11 * a22 - a12 * a12;
      double a, b;
      if (det > 0) {
        a = (r1 * a22 - r2 * a12) / det;
        b = (r2 * a11 - r1 * a12) / det;
      } else {
        a = nu > 0 ? -su / nu : (nt > 0 ? -st / nt : 0.0);
        b = nw > 0 ? -sw / nw : (nt > 0 ? -st / nt : 0.0);
      }
      col_max[s.start] = std::exp(-2.0 * a);
      col_max[s.start + 1] = std::exp(-2.0 * b);
      for (int j = s.start + 2; j < s.start + s.len; ++j) col_max[j] = std::exp(-(a + b));
    }
    for (int i = 0; i < p; ++i)
      if (row_max[i] > 0) row_scale_[i] /= std::sqrt(row_max[i]);
    for (int j = 0; j < n; ++j)
      if (col_max[j] > 0) col_scale_[j] /= std::sqrt(col_max[j]);
  }

  // Bounded repair pass. Link rows that tie a column pair living at very
  // different magnitudes (battery force into the SOC-rate and cone-tail
  // link rows) keep one entry far below 1 even at the sup-norm fixed
  // point, because both columns are pinned near 1 by their other rows.
  // Lifting just those rows is plain diagonal scaling and touches nothing
  // else; the lift is capped so no entry in the row leaves [band_lo,
  // band_hi]. Repair succeeds whenever a row's own dynamic range is below
  // band_hi / band_lo.
  const double band_lo = 2e-4, band_hi = 5e3;
  Eigen::VectorXd row_min = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  row_max.setZero();
  for (int j = 0; j < A_.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
      double v = std::abs(it.value()) * row_scale_[it.row()] * col_scale_[j];
      if (v == 0.0) continue;
      row_min[it.row()] = std::min(row_min[it.row()], v);
      row_max[it.row()] = std::max(row_max[it.row()], v);
    }
  }
  for (int i = 0; i < p; ++i) {
    if (!(row_max[i] > 0) || row_min[i] >= band_lo) continue;
    double lift = std::min(band_lo / row_min[i], band_hi / row_max[i]);
    if (lift > 1.0) row_scale_[i] *= lift;
  }

  for (int j = 0; j < A_.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it)
      it.valueRef() *= row_scale_[it.row()] * col_scale_[j];
  b_vec_ = b_vec_.cwiseProduct(row_scale_);
  c_vec_ = c_vec_.cwiseProduct(col_scale_);

  obj_scale_ = c_vec_.lpNorm<Eigen::Infinity>();
  if (obj_scale_ <= 0) obj_scale_ = 1.0;
  c_vec_ /= obj_scale_;
  equilibrated_ = true;
}

Eigen::VectorXd ConicProgram::unscale_solution(const Eigen::VectorXd& x) const {
  if (!equilibrated_) return x;
  return x.cwiseProduct(col_scale_);
}

Eigen::VectorXd ConicProgram::unscale_duals(const Eigen::VectorXd& y) const {
  if (!equilibrated_) return y;
  return obj_scale_ * y.cwiseProduct(row_scale_);
}

bool ConicProgram::in_cones(const Eigen::VectorXd& x, double tol) const {
  for (const ConeSlice& s : cones_) {
    if (s.kind == ConeKind::NonNeg) {
      for (int j = s.start; j < s.start + s.len; ++j)
        if (x[j] < -tol) return false;
    } else if (s.kind == ConeKind::Soc) {
      double tail = x.segment(s.start + 1, s.len - 1).norm();
      if (x[s.start] < tail - tol) return false;
    } else {
      double u = x[s.start], w = x[s.start + 1];
      double tail2 = x.segment(s.start + 2, s.len - 2).squaredNorm();
      if (u < -tol || w < -tol || 2.0 * u * w < tail2 - tol) return false;
    }
  }
  return true;
}

}  // namespace hytrain
