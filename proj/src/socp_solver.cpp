#include "hytrain/socp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "hytrain/kernels.hpp"
#include "hytrain/kkt_ldlt.hpp"

namespace hytrain {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::OptimalInaccurate: return "optimal_inaccurate";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Numerics: return "numerics";
  }
  return "?";
}

SolverProblem make_solver_problem(const ConicProgram& prog) {
  if (!prog.finalized()) throw std::logic_error("make_solver_problem: program not finalized");
  SolverProblem sp;
  sp.A = prog.matrix();
  sp.b = prog.rhs();
  sp.c = prog.objective();

  const int n = prog.num_vars();
  int m = 0;
  for (const ConeSlice& cs : prog.cones()) m += cs.len;
  if (m == 0) throw std::invalid_argument("make_solver_problem: program has no cones");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m) + prog.cones().size());
  int row = 0;
  for (const ConeSlice& cs : prog.cones()) {
    if (cs.kind != ConeKind::NonNeg) continue;
    for (int j = 0; j < cs.len; ++j) trip.emplace_back(row++, cs.start + j, -1.0);
  }
  sp.n_nonneg = row;
  const double r2 = 1.0 / std::sqrt(2.0);
  for (const ConeSlice& cs : prog.cones()) {
    if (cs.kind == ConeKind::NonNeg) continue;
    if (cs.kind == ConeKind::Soc) {
      for (int j = 0; j < cs.len; ++j) trip.emplace_back(row + j, cs.start + j, -1.0);
    } else {
      trip.emplace_back(row, cs.start, -r2);
      trip.emplace_back(row, cs.start + 1, -r2);
      trip.emplace_back(row + 1, cs.start, -r2);
      trip.emplace_back(row + 1, cs.start + 1, r2);
      for (int j = 2; j < cs.len; ++j) trip.emplace_back(row + j, cs.start + j, -1.0);
    }
    sp.soc_dims.push_back(cs.len);
    row += cs.len;
  }
  sp.G.resize(m, n);
  sp.G.setFromTriplets(trip.begin(), trip.end());
  sp.G.makeCompressed();
  sp.h = Eigen::VectorXd::Zero(m);
  return sp;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SocState {
  int start = 0;  // offset within the cone vector
  int dim = 0;
  double eta = 1.0, eta_sq = 1.0;
  double a = 1.0, wq = 0.0;   // normalized scaling point (a, q), wq = ||q||^2
  Eigen::VectorXd q;
  Eigen::MatrixXd w2;          // eta^2 * W_bar^2, dense dim x dim
  std::vector<long> slots;     // KKT value slots, upper triangle column-major
};

class HsdSolver {
 public:
  HsdSolver(const SolverProblem& P, const SolverOptions& o) : P_(P), opt_(o) { setup(); }
  SolveResult run();

 private:
  void setup();
  void build_kkt();
  long kkt_slot(int r, int c) const;
  void set_identity_scaling();
  bool update_scalings();
  void write_kkt_scaling_values();

  // lambda = W v (current scaling)
  void apply_w(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  // out += W^2 v
  void apply_w2_add(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  // w = u o v (Jordan product); returns sum |w_cone0|
  void conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& w) const;
  // v = u \ w (inverse Jordan product)
  void conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::VectorXd& v) const;
  void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out) const;
  double line_search(const Eigen::VectorXd& ds_by_w, const Eigen::VectorXd& w_dz, double dtau, double dkap) const;

  int solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz);

  void compute_residuals();
  void update_statistics();
  SolveStatus check_exit(bool reduced) const;
  double merit() const { return std::max(pres_, dres_); }
  void finish(SolveResult& res, SolveStatus code);

  const SolverProblem& P_;
  SolverOptions opt_;
  int n_ = 0, p_ = 0, m_ = 0, nl_ = 0;
  int nu_ = 0;  // barrier degree
  std::vector<SocState> socs_;

  kernels::SparseRowMajor a_rm_, at_rm_, g_rm_, gt_rm_;
  Eigen::SparseMatrix<double> K_;
  std::vector<long> lp_slots_;
  KktLdlt ldlt_;

  Eigen::VectorXd lp_v_, lp_w_;  // s_i/z_i and sqrt(s_i/z_i) on the orthant
  Eigen::VectorXd x_, y_, z_, s_, lambda_;
  double tau_ = 1.0, kap_ = 1.0;

  Eigen::VectorXd rx_, ry_, rz_;
  double hresx_ = 0, hresy_ = 0, hresz_ = 0, rt_ = 0;
  double cx_ = 0, by_ = 0, hz_ = 0;
  double nx_ = 0, ny_ = 0, nz_ = 0, ns_ = 0;
  double resx0_ = 1, resy0_ = 1, resz0_ = 1;

  double gap_ = 0, mu_ = 0, pcost_ = 0, dcost_ = 0, pres_ = 0, dres_ = 0, kapovert_ = 0;
  double last_kkt_err_ = 0;  // worst relative KKT residual since last reset
  std::optional<double> relgap_, pinfres_, dinfres_;

  SolveInfo info_;
};

void HsdSolver::setup() {
  n_ = P_.num_vars();
  p_ = P_.num_eq();
  m_ = P_.num_cone_rows();
  nl_ = P_.n_nonneg;
  if (n_ <= 0) throw std::invalid_argument("solver: no variables");
  if (m_ <= 0) throw std::invalid_argument("solver: no cone rows");
  int dims_total = nl_;
  int start = nl_;
  for (int d : P_.soc_dims) {
    if (d < 2) throw std::invalid_argument("solver: SOC dimension must be >= 2");
    SocState sc;
    sc.start = start;
    sc.dim = d;
    sc.q = Eigen::VectorXd::Zero(d - 1);
    sc.w2 = Eigen::MatrixXd::Identity(d, d);
    socs_.push_back(std::move(sc));
    start += d;
    dims_total += d;
  }
  if (dims_total != m_) throw std::invalid_argument("solver: cone dimensions disagree with G rows");
  if (P_.A.rows() != p_ || P_.A.cols() != n_ || P_.G.cols() != n_)
    throw std::invalid_argument("solver: matrix shapes disagree");
  nu_ = nl_ + static_cast<int>(socs_.size());

  a_rm_ = P_.A;
  at_rm_ = P_.A.transpose();
  g_rm_ = P_.G;
  gt_rm_ = P_.G.transpose();

  lp_v_ = Eigen::VectorXd::Ones(nl_);
  lp_w_ = Eigen::VectorXd::Ones(nl_);

  build_kkt();
  std::vector<int> signs(n_ + p_ + m_);
  for (int i = 0; i < n_ + p_ + m_; ++i) signs[i] = i < n_ ? 1 : -1;
  KktLdlt::Options lo;
  lo.static_reg = opt_.static_reg;
  lo.dynamic_eps = opt_.dynamic_eps;
  lo.dynamic_bump = opt_.dynamic_bump;
  ldlt_.analyze(K_, std::move(signs), lo);
  info_.factor_nnz = ldlt_.factor_nnz();
}

/// KKT matrix, upper triangle:
///   [ 0   A'   G'  ]
///   [ A   0    0   ]
///   [ G   0  -W^2  ]
/// Regularization is applied inside the factorization, not stored here, so
/// iterative refinement sees the true matrix.
void HsdSolver::build_kkt() {
  std::vector<Eigen::Triplet<double>> trip;
  long w2_upper = 0;
  for (const SocState& sc : socs_) w2_upper += sc.dim * (sc.dim + 1) / 2;
  trip.reserve(P_.A.nonZeros() + P_.G.nonZeros() + nl_ + w2_upper);

  for (int j = 0; j < P_.A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P_.A, j); it; ++it)
      trip.emplace_back(j, n_ + static_cast<int>(it.row()), it.value());
  for (int j = 0; j < P_.G.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P_.G, j); it; ++it)
      trip.emplace_back(j, n_ + p_ + static_cast<int>(it.row()), it.value());
  const int zoff = n_ + p_;
  for (int i = 0; i < nl_; ++i) trip.emplace_back(zoff + i, zoff + i, -1.0);
  for (const SocState& sc : socs_)
    for (int cj = 0; cj < sc.dim; ++cj)
      for (int ri = 0; ri <= cj; ++ri)
        trip.emplace_back(zoff + sc.start + ri, zoff + sc.start + cj, ri == cj ? -1.0 : 0.0);

  const int dim_k = n_ + p_ + m_;
  K_.resize(dim_k, dim_k);
  K_.setFromTriplets(trip.begin(), trip.end());
  K_.makeCompressed();

  lp_slots_.resize(nl_);
  for (int i = 0; i < nl_; ++i) lp_slots_[i] = kkt_slot(zoff + i, zoff + i);
  for (SocState& sc : socs_) {
    sc.slots.clear();
    sc.slots.reserve(sc.dim * (sc.dim + 1) / 2);
    for (int cj = 0; cj < sc.dim; ++cj)
      for (int ri = 0; ri <= cj; ++ri)
        sc.slots.push_back(kkt_slot(zoff + sc.start + ri, zoff + sc.start + cj));
  }
}

long HsdSolver::kkt_slot(int r, int c) const {
  const int* op = K_.outerIndexPtr();
  const int* ii = K_.innerIndexPtr();
  for (long k = op[c]; k < op[c + 1]; ++k)
    if (ii[k] == r) return k;
  throw std::logic_error("kkt_slot: entry not present");
}

void HsdSolver::set_identity_scaling() {
  lp_v_.setOnes();
  lp_w_.setOnes();
  for (SocState& sc : socs_) {
    sc.eta = sc.eta_sq = 1.0;
    sc.a = 1.0;
    sc.wq = 0.0;
    sc.q.setZero();
    sc.w2.setIdentity();
  }
}

/// Nesterov-Todd scaling from the current (s, z). Fails (returns false) when
/// either iterate has left its cone, which signals numerical breakdown.
bool HsdSolver::update_scalings() {
  for (int i = 0; i < nl_; ++i) {
    if (s_[i] <= 0.0 || z_[i] <= 0.0) return false;
    lp_v_[i] = s_[i] / z_[i];
    lp_w_[i] = std::sqrt(lp_v_[i]);
  }
  for (SocState& sc : socs_) {
    const auto s0 = s_.segment(sc.start, sc.dim);
    const auto z0 = z_.segment(sc.start, sc.dim);
    const double sres = s0[0] * s0[0] - s0.tail(sc.dim - 1).squaredNorm();
    const double zres = z0[0] * z0[0] - z0.tail(sc.dim - 1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0) return false;
    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    Eigen::VectorXd sbar = s0 / snorm;
    Eigen::VectorXd zbar = z0 / znorm;
    sc.eta_sq = snorm / znorm;
    sc.eta = std::sqrt(sc.eta_sq);

    double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    sc.a = (0.5 / gamma) * (sbar[0] + zbar[0]);
    sc.q = (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
    sc.wq = sc.q.squaredNorm();

    // W = eta * [a q'; q I + qq'/(1+a)], squared in closed form.
    const double cc = 1.0 + sc.a + sc.wq / (1.0 + sc.a);
    const double dd = 1.0 + 2.0 / (1.0 + sc.a) + sc.wq / ((1.0 + sc.a) * (1.0 + sc.a));
    sc.w2(0, 0) = sc.eta_sq * (sc.a * sc.a + sc.wq);
    for (int i = 1; i < sc.dim; ++i) {
      sc.w2(0, i) = sc.w2(i, 0) = sc.eta_sq * cc * sc.q[i - 1];
      for (int j = 1; j <= i; ++j)
        sc.w2(i, j) = sc.w2(j, i) = sc.eta_sq * (dd * sc.q[i - 1] * sc.q[j - 1] + (i == j ? 1.0 : 0.0));
    }
  }
  apply_w(z_, lambda_);
  return true;
}

void HsdSolver::write_kkt_scaling_values() {
  double* vals = K_.valuePtr();
  for (int i = 0; i < nl_; ++i) vals[lp_slots_[i]] = -lp_v_[i];
  for (const SocState& sc : socs_) {
    size_t k = 0;
    for (int cj = 0; cj < sc.dim; ++cj)
      for (int ri = 0; ri <= cj; ++ri) vals[sc.slots[k++]] = -sc.w2(ri, cj);
  }
}

void HsdSolver::apply_w(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  out.resize(m_);
  out.head(nl_) = lp_w_.cwiseProduct(v.head(nl_));
  for (const SocState& sc : socs_) {
    const auto vs = v.segment(sc.start, sc.dim);
    const double zeta = sc.q.dot(vs.tail(sc.dim - 1));
    const double factor = vs[0] + zeta / (1.0 + sc.a);
    out[sc.start] = sc.eta * (sc.a * vs[0] + zeta);
    out.segment(sc.start + 1, sc.dim - 1) = sc.eta * (vs.tail(sc.dim - 1) + factor * sc.q);
  }
}

void HsdSolver::apply_w2_add(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  out.head(nl_) += lp_v_.cwiseProduct(v.head(nl_));
  for (const SocState& sc : socs_)
    out.segment(sc.start, sc.dim).noalias() += sc.w2 * v.segment(sc.start, sc.dim);
}

void HsdSolver::conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& w) const {
  w.resize(m_);
  w.head(nl_) = u.head(nl_).cwiseProduct(v.head(nl_));
  for (const SocState& sc : socs_) {
    const auto us = u.segment(sc.start, sc.dim);
    const auto vs = v.segment(sc.start, sc.dim);
    w[sc.start] = us.dot(vs);
    w.segment(sc.start + 1, sc.dim - 1) = us[0] * vs.tail(sc.dim - 1) + vs[0] * us.tail(sc.dim - 1);
  }
}

void HsdSolver::conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w, Eigen::VectorXd& v) const {
  v.resize(m_);
  v.head(nl_) = w.head(nl_).cwiseQuotient(u.head(nl_));
  for (const SocState& sc : socs_) {
    const auto us = u.segment(sc.start, sc.dim);
    const auto ws = w.segment(sc.start, sc.dim);
    const double rho = us[0] * us[0] - us.tail(sc.dim - 1).squaredNorm();
    const double zeta = us.tail(sc.dim - 1).dot(ws.tail(sc.dim - 1));
    const double factor = (zeta / us[0] - ws[0]) / rho;
    v[sc.start] = (us[0] * ws[0] - zeta) / rho;
    v.segment(sc.start + 1, sc.dim - 1) = factor * us.tail(sc.dim - 1) + ws.tail(sc.dim - 1) / us[0];
  }
}

/// Shifts r along the cone's identity element until strictly interior.
void HsdSolver::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out) const {
  double alpha = -opt_.step_gamma;
  for (int i = 0; i < nl_; ++i)
    if (r[i] <= 0.0 && -r[i] > alpha) alpha = -r[i];
  for (const SocState& sc : socs_) {
    const double cres = r[sc.start] - r.segment(sc.start + 1, sc.dim - 1).norm();
    if (cres <= 0.0 && -cres > alpha) alpha = -cres;
  }
  alpha += 1.0;
  out = r;
  out.head(nl_).array() += alpha;
  for (const SocState& sc : socs_) out[sc.start] += alpha;
}

/// Largest step keeping (lambda + a*ds, lambda + a*dz, tau + a*dtau,
/// kap + a*dkap) in the interior, in the scaled (lambda) space.
double HsdSolver::line_search(const Eigen::VectorXd& ds_by_w, const Eigen::VectorXd& w_dz,
                              double dtau, double dkap) const {
  double alpha = 1.0 / opt_.step_min;
  if (nl_ > 0) {
    double rho_min = (ds_by_w.head(nl_).cwiseQuotient(lambda_.head(nl_))).minCoeff();
    double sig_min = (w_dz.head(nl_).cwiseQuotient(lambda_.head(nl_))).minCoeff();
    double worst = std::min(rho_min, sig_min);
    if (worst < 0.0) alpha = 1.0 / (-worst);
  }
  const double t_bound = -tau_ / dtau;
  if (t_bound > 0.0 && t_bound < alpha) alpha = t_bound;
  const double k_bound = -kap_ / dkap;
  if (k_bound > 0.0 && k_bound < alpha) alpha = k_bound;

  alpha = kernels::min_over_blocks(
      static_cast<int>(socs_.size()), alpha,
      [&](int k) {
        const SocState& sc = socs_[k];
        const auto lk = lambda_.segment(sc.start, sc.dim);
        const double lknorm2 = lk[0] * lk[0] - lk.tail(sc.dim - 1).squaredNorm();
        if (lknorm2 <= 0.0) return kInf;
        const double lknorm = std::sqrt(lknorm2);
        const Eigen::VectorXd lkbar = lk / lknorm;
        const double lkinv = 1.0 / lknorm;

        const auto dsk = ds_by_w.segment(sc.start, sc.dim);
        const auto dzk = w_dz.segment(sc.start, sc.dim);
        const double lbar_ds = lkbar[0] * dsk[0] - lkbar.tail(sc.dim - 1).dot(dsk.tail(sc.dim - 1));
        const double lbar_dz = lkbar[0] * dzk[0] - lkbar.tail(sc.dim - 1).dot(dzk.tail(sc.dim - 1));

        double factor = (lbar_ds + dsk[0]) / (lkbar[0] + 1.0);
        const double rho0 = lkinv * lbar_ds;
        const double rho_tail = (lkinv * (dsk.tail(sc.dim - 1) - factor * lkbar.tail(sc.dim - 1))).norm();
        const double rhonorm = rho_tail - rho0;

        factor = (lbar_dz + dzk[0]) / (lkbar[0] + 1.0);
        const double sig0 = lkinv * lbar_dz;
        const double sig_tail = (lkinv * (dzk.tail(sc.dim - 1) - factor * lkbar.tail(sc.dim - 1))).norm();
        const double signorm = sig_tail - sig0;

        const double conic_step = std::max(0.0, std::max(rhonorm, signorm));
        return conic_step > 0.0 ? 1.0 / conic_step : kInf;
      },
      kernels::default_mode());

  return std::clamp(alpha, opt_.step_min, opt_.step_max);
}

/// Solves the KKT system for [dx; dy; dz] with iterative refinement against
/// the unregularized matrix. Returns the number of refinement steps taken.
int HsdSolver::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& dz) {
  Eigen::VectorXd sol = ldlt_.solve(rhs);
  const double threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * opt_.refine_acc;
  double err_prev = kInf;
  Eigen::VectorXd correction;

  Eigen::VectorXd ex(n_), ey(p_), ez(m_), e(n_ + p_ + m_), tmp;
  int k_ref = 0;
  for (k_ref = 0; k_ref <= opt_.max_refine; ++k_ref) {
    const auto dxs = sol.head(n_);
    const auto dys = sol.segment(n_, p_);
    const auto dzs = sol.tail(m_);

    // ex = bx - A' dy - G' dz ; ey = by - A dx ; ez = bz - G dx + W^2 dz
    ex = rhs.head(n_);
    kernels::spmv(gt_rm_, Eigen::VectorXd(dzs), tmp);
    ex -= tmp;
    if (p_ > 0) {
      kernels::spmv(at_rm_, Eigen::VectorXd(dys), tmp);
      ex -= tmp;
    }
    if (p_ > 0) {
      ey = rhs.segment(n_, p_);
      kernels::spmv_add(a_rm_, Eigen::VectorXd(dxs), -1.0, ey);
    }
    ez = rhs.tail(m_);
    kernels::spmv_add(g_rm_, Eigen::VectorXd(dxs), -1.0, ez);
    apply_w2_add(Eigen::VectorXd(dzs), ez);

    double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
    if (p_ > 0) err = std::max(err, ey.lpNorm<Eigen::Infinity>());

    if (k_ref > 0 && err > err_prev) {
      sol -= correction;
      --k_ref;
      break;
    }
    if (k_ref == opt_.max_refine || err < threshold ||
        (k_ref > 0 && err_prev < opt_.refine_stall * err))
      break;
    err_prev = err;

    e.head(n_) = ex;
    e.segment(n_, p_) = ey;
    e.tail(m_) = ez;
    correction = ldlt_.solve(e);
    sol += correction;
  }

  dx = sol.head(n_);
  dy = sol.segment(n_, p_);
  dz = sol.tail(m_);
  {
    const auto dxs = sol.head(n_);
    const auto dys = sol.segment(n_, p_);
    const auto dzs = sol.tail(m_);
    ex = rhs.head(n_);
    kernels::spmv(gt_rm_, Eigen::VectorXd(dzs), tmp);
    ex -= tmp;
    if (p_ > 0) {
      kernels::spmv(at_rm_, Eigen::VectorXd(dys), tmp);
      ex -= tmp;
    }
    double err = ex.lpNorm<Eigen::Infinity>();
    if (p_ > 0) {
      ey = rhs.segment(n_, p_);
      kernels::spmv_add(a_rm_, Eigen::VectorXd(dxs), -1.0, ey);
      err = std::max(err, ey.lpNorm<Eigen::Infinity>());
    }
    ez = rhs.tail(m_);
    kernels::spmv_add(g_rm_, Eigen::VectorXd(dxs), -1.0, ez);
    apply_w2_add(Eigen::VectorXd(dzs), ez);
    err = std::max(err, ez.lpNorm<Eigen::Infinity>());
    last_kkt_err_ = std::max(last_kkt_err_, err / (1.0 + rhs.lpNorm<Eigen::Infinity>()));
  }
  return k_ref;
}

void HsdSolver::compute_residuals() {
  Eigen::VectorXd tmp;
  // rx = -A'y - G'z - tau*c, with hresx = ||-A'y - G'z||
  kernels::spmv(gt_rm_, z_, tmp);
  rx_ = -tmp;
  if (p_ > 0) {
    kernels::spmv(at_rm_, y_, tmp);
    rx_ -= tmp;
  }
  hresx_ = kernels::norm2(rx_);
  rx_ -= tau_ * P_.c;

  // ry = A x - tau*b
  if (p_ > 0) {
    kernels::spmv(a_rm_, x_, ry_);
    hresy_ = kernels::norm2(ry_);
    ry_ -= tau_ * P_.b;
  } else {
    ry_.resize(0);
    hresy_ = 0.0;
  }

  // rz = s + G x - tau*h
  kernels::spmv(g_rm_, x_, rz_);
  rz_ += s_;
  hresz_ = kernels::norm2(rz_);
  rz_ -= tau_ * P_.h;

  cx_ = kernels::dot(P_.c, x_);
  by_ = p_ > 0 ? kernels::dot(P_.b, y_) : 0.0;
  hz_ = kernels::dot(P_.h, z_);
  rt_ = kap_ + cx_ + by_ + hz_;

  nx_ = kernels::norm2(x_);
  ny_ = p_ > 0 ? kernels::norm2(y_) : 0.0;
  nz_ = kernels::norm2(z_);
  ns_ = kernels::norm2(s_);
}

void HsdSolver::update_statistics() {
  gap_ = kernels::dot(s_, z_);
  mu_ = (gap_ + kap_ * tau_) / (nu_ + 1);
  kapovert_ = kap_ / tau_;
  pcost_ = cx_ / tau_;
  dcost_ = -(hz_ + by_) / tau_;

  if (pcost_ < 0.0)
    relgap_ = gap_ / (-pcost_);
  else if (dcost_ > 0.0)
    relgap_ = gap_ / dcost_;
  else
    relgap_ = std::nullopt;

  const double nry = p_ > 0 ? kernels::norm2(ry_) / std::max(resy0_ + nx_, 1.0) : 0.0;
  const double nrz = kernels::norm2(rz_) / std::max(resz0_ + nx_ + ns_, 1.0);
  pres_ = std::max(nry, nrz) / tau_;
  dres_ = kernels::norm2(rx_) / std::max(resx0_ + ny_ + nz_, 1.0) / tau_;

  pinfres_.reset();
  dinfres_.reset();
  if ((hz_ + by_) / std::max(ny_ + nz_, 1.0) < -opt_.reltol)
    pinfres_ = hresx_ / std::max(ny_ + nz_, 1.0);
  if (cx_ / std::max(nx_, 1.0) < -opt_.reltol)
    dinfres_ = std::max(hresy_ / std::max(nx_, 1.0), hresz_ / std::max(nx_ + ns_, 1.0));
}

SolveStatus HsdSolver::check_exit(bool reduced) const {
  const double feastol = reduced ? opt_.feastol_inacc : opt_.feastol;
  const double abstol = reduced ? opt_.abstol_inacc : opt_.abstol;
  const double reltol = reduced ? opt_.reltol_inacc : opt_.reltol;

  if ((-cx_ > 0.0 || -by_ - hz_ >= -abstol) && pres_ < feastol && dres_ < feastol &&
      (gap_ < abstol || (relgap_ && *relgap_ < reltol)))
    return reduced ? SolveStatus::OptimalInaccurate : SolveStatus::Optimal;

  if (dinfres_ && *dinfres_ < feastol && tau_ < kap_) return SolveStatus::DualInfeasible;

  if (pinfres_ && *pinfres_ < feastol && (tau_ < kap_ || (tau_ < feastol && kap_ < feastol)))
    return SolveStatus::PrimalInfeasible;

  return SolveStatus::MaxIterations;  // sentinel: not converged yet
}

void HsdSolver::finish(SolveResult& res, SolveStatus code) {
  res.status = code;
  res.x = x_;
  res.y = y_;
  res.z = z_;
  res.s = s_;
  if (is_optimal(code)) {
    res.x /= tau_;
    res.y /= tau_;
    res.z /= tau_;
    res.s /= tau_;
    info_.message = std::string("converged: ") + to_string(code);
  } else if (code == SolveStatus::PrimalInfeasible) {
    // Certificate: A'y + G'z ~ 0, z in K*, b'y + h'z = -1 after normalization.
    const double scale = -(by_ + hz_);
    if (scale > 0.0) {
      res.y /= scale;
      res.z /= scale;
    }
    Eigen::VectorXd attgz;
    kernels::spmv(gt_rm_, res.z, attgz);
    if (p_ > 0) {
      Eigen::VectorXd tmp;
      kernels::spmv(at_rm_, res.y, tmp);
      attgz += tmp;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "primal infeasibility certificate: b'y + h'z = -1, ||A'y + G'z||_inf = %.3e",
                  attgz.lpNorm<Eigen::Infinity>());
    info_.message = buf;
  } else if (code == SolveStatus::DualInfeasible) {
    // Certificate: A x ~ 0, -G x in K, c'x = -1 after normalization.
    if (cx_ < 0.0) res.x /= -cx_;
    Eigen::VectorXd ax(p_);
    if (p_ > 0) kernels::spmv(a_rm_, res.x, ax);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "dual infeasibility certificate: c'x = -1, ||Ax||_inf = %.3e",
                  p_ > 0 ? ax.lpNorm<Eigen::Infinity>() : 0.0);
    info_.message = buf;
  } else {
    info_.message = std::string("stopped: ") + to_string(code);
  }
  info_.pcost = pcost_;
  info_.dcost = dcost_;
  info_.gap = gap_;
  info_.relgap = relgap_;
  info_.pres = pres_;
  info_.dres = dres_;
  info_.tau = tau_;
  info_.kap = kap_;
  res.info = info_;
}

SolveResult HsdSolver::run() {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;

  resx0_ = std::max(1.0, std::sqrt(kernels::dot(P_.c, P_.c)));
  resy0_ = p_ > 0 ? std::max(1.0, std::sqrt(kernels::dot(P_.b, P_.b))) : 1.0;
  resz0_ = std::max(1.0, std::sqrt(kernels::dot(P_.h, P_.h)));

  const int dim_k = n_ + p_ + m_;
  Eigen::VectorXd rhs1(dim_k), rhs2(dim_k);
  Eigen::VectorXd dx1(n_), dy1(p_), dz1(m_), dx2(n_), dy2(p_), dz2(m_);

  // Initial point from two least-squares solves with identity scaling:
  //   [0; b; h] gives the primal seed, [-c; 0; 0] the dual seed.
  set_identity_scaling();
  write_kkt_scaling_values();
  ldlt_.factor(K_);
  info_.dynamic_reg_bumps += ldlt_.last_dynamic_bumps();

  rhs1.setZero();
  rhs1.segment(n_, p_) = P_.b;
  rhs1.tail(m_) = P_.h;
  solve_kkt(rhs1, dx1, dy1, dz1);
  x_ = dx1;
  bring_to_cone(-dz1, s_);

  rhs2.setZero();
  rhs2.head(n_) = -P_.c;
  solve_kkt(rhs2, dx2, dy2, dz2);
  y_ = dy2;
  bring_to_cone(dz2, z_);

  lambda_.resize(m_);
  tau_ = 1.0;
  kap_ = 1.0;
  rhs1.head(n_) = -P_.c;  // rhs1 = [-c; b; h] from here on

  SolveStatus code = SolveStatus::Numerics;
  double pres_prev = kInf;
  double merit_best = kInf;
  SolveResult best;
  bool have_best = false;
  const auto remember_best = [&](int iter) {
    if (!have_best || merit() < merit_best) {
      merit_best = merit();
      best.x = x_;
      best.y = y_;
      best.z = z_;
      best.s = s_;
      best.info.iterations = iter;
      have_best = true;
    }
  };
  // Restores the best iterate and reports at reduced accuracy if possible.
  const auto bail = [&](const char* why) {
    if (have_best) {
      x_ = best.x;
      y_ = best.y;
      z_ = best.z;
      s_ = best.s;
      compute_residuals();
      update_statistics();
    }
    SolveStatus c = check_exit(true);
    if (c == SolveStatus::MaxIterations) c = SolveStatus::Numerics;
    if (opt_.verbose) std::printf("recovery (%s): %s\n", why, to_string(c));
    return c;
  };

  double step = 0.0, sigma = 0.0;
  int iter = 0;
  for (iter = 0; iter <= opt_.max_iterations; ++iter) {
    compute_residuals();
    update_statistics();
    info_.iterations = iter;
    info_.trace.push_back({iter, pcost_, dcost_, gap_, pres_, dres_, tau_, kap_, mu_, step, sigma});
    if (opt_.verbose) {
      std::printf("%3d  % .6e  % .6e  %.2e  %.2e  %.2e  %.1e  %.2e  %.4f  %.3f  k%.1e\n", iter,
                  pcost_, dcost_, gap_, pres_, dres_, kapovert_, mu_, step, sigma, last_kkt_err_);
      last_kkt_err_ = 0;
    }

    if (iter > 0 && (pres_ > opt_.safeguard * pres_prev || gap_ < 0.0)) {
      code = bail("unreliable search direction");
      break;
    }
    pres_prev = pres_;

    code = check_exit(false);
    if (code != SolveStatus::MaxIterations) break;

    if (!std::isfinite(pcost_) || !std::isfinite(gap_)) {
      code = bail("non-finite iterate");
      break;
    }
    if (iter > 0 && step <= opt_.step_gamma * opt_.step_min * (1.0 + 1e-12)) {
      code = bail("stalled line search");
      break;
    }
    if (iter == opt_.max_iterations) {
      code = bail("iteration limit");
      if (code == SolveStatus::Numerics) code = SolveStatus::MaxIterations;
      break;
    }
    remember_best(iter);

    if (!update_scalings()) {
      code = bail("iterate left the cone");
      break;
    }
    write_kkt_scaling_values();
    ldlt_.factor(K_);
    info_.dynamic_reg_bumps += ldlt_.last_dynamic_bumps();

    // Direction 1: constant right-hand side [-c; b; h].
    solve_kkt(rhs1, dx1, dy1, dz1);

    // Affine (predictor) direction.
    rhs2.head(n_) = rx_;
    rhs2.segment(n_, p_) = -ry_;
    rhs2.tail(m_) = s_ - rz_;
    solve_kkt(rhs2, dx2, dy2, dz2);

    const double dtau_denom = kap_ / tau_ - kernels::dot(P_.c, dx1) -
                              (p_ > 0 ? kernels::dot(P_.b, dy1) : 0.0) - kernels::dot(P_.h, dz1);
    const double dtau_aff = (rt_ - kap_ + kernels::dot(P_.c, dx2) +
                             (p_ > 0 ? kernels::dot(P_.b, dy2) : 0.0) + kernels::dot(P_.h, dz2)) /
                            dtau_denom;

    dz2 += dtau_aff * dz1;  // full affine dz
    Eigen::VectorXd w_dz;
    apply_w(dz2, w_dz);
    Eigen::VectorXd ds_by_w = -w_dz - lambda_;  // W^{-1} ds_affine
    const double dkap_aff = -kap_ - kap_ / tau_ * dtau_aff;

    const double step_aff = line_search(ds_by_w, w_dz, dtau_aff, dkap_aff);
    sigma = std::clamp(std::pow(1.0 - step_aff, 3), opt_.sigma_min, opt_.sigma_max);
    const double sigmamu = sigma * mu_;

    // Combined (corrector) direction with Mehrotra second-order term:
    // ds = lambda o lambda + (W^{-1}ds_aff) o (W dz_aff) - sigma*mu*e.
    // Followed by Gondzio centrality correctors: each round raises the
    // product targets by `corr` where the trial point leaves the band, at
    // the cost of one more backsolve, and keeps the direction only if the
    // feasible step grows.
    Eigen::VectorXd aff_prod, cross;
    conic_product(lambda_, lambda_, aff_prod);
    conic_product(ds_by_w, w_dz, cross);
    aff_prod += cross;
    const double kap_cross = dkap_aff * dtau_aff;

    Eigen::VectorXd corr = Eigen::VectorXd::Zero(m_);
    double corr_kap = 0.0;
    Eigen::VectorXd ds1(m_), lam_div_ds, w_lam_div_ds;
    const double oms = 1.0 - sigma;

    double dtau = 0.0, dkap = 0.0;
    Eigen::VectorXd best_dx, best_dy, best_dz, best_ds_by_w, best_w_dz;
    double best_dtau = 0.0, best_dkap = 0.0, best_step = -1.0;

    for (int round = 0;; ++round) {
      ds1 = aff_prod - corr;
      ds1.head(nl_).array() -= sigmamu;
      for (const SocState& sc : socs_) ds1[sc.start] -= sigmamu;

      conic_division(lambda_, ds1, lam_div_ds);
      apply_w(lam_div_ds, w_lam_div_ds);

      rhs2.head(n_) = oms * rx_;
      rhs2.segment(n_, p_) = -oms * ry_;
      rhs2.tail(m_) = -oms * rz_ + w_lam_div_ds;
      solve_kkt(rhs2, dx2, dy2, dz2);

      const double bkap = kap_ * tau_ + kap_cross - sigmamu - corr_kap;
      dtau = (oms * rt_ - bkap / tau_ + kernels::dot(P_.c, dx2) +
              (p_ > 0 ? kernels::dot(P_.b, dy2) : 0.0) + kernels::dot(P_.h, dz2)) /
             dtau_denom;

      dx2 += dtau * dx1;
      dy2 += dtau * dy1;
      dz2 += dtau * dz1;
      apply_w(dz2, w_dz);
      ds_by_w = -(lam_div_ds + w_dz);
      dkap = -(bkap + kap_ * dtau) / tau_;

      const double step_raw = line_search(ds_by_w, w_dz, dtau, dkap);
      const bool improved = round == 0 || step_raw > best_step + 0.03;
      if (improved) {
        best_step = step_raw;
        best_dx = dx2;
        best_dy = dy2;
        best_dz = dz2;
        best_ds_by_w = ds_by_w;
        best_w_dz = w_dz;
        best_dtau = dtau;
        best_dkap = dkap;
      }
      if (!improved || round >= opt_.max_correctors || best_step >= 0.95) break;

      const double ahat = std::min(1.0, best_step + opt_.corr_alpha_boost);
      const double lo = opt_.corr_beta_min * sigmamu;
      const double hi = opt_.corr_beta_max * sigmamu;
      double worst = 0.0;
      for (int i = 0; i < nl_; ++i) {
        const double pv = (lambda_[i] + ahat * ds_by_w[i]) * (lambda_[i] + ahat * w_dz[i]);
        const double d = pv < lo ? lo - pv : (pv > hi ? hi - pv : 0.0);
        corr[i] += d;
        worst = std::max(worst, std::abs(d));
      }
      for (const SocState& sc : socs_) {
        const auto lk = lambda_.segment(sc.start, sc.dim);
        const Eigen::VectorXd v = lk + ahat * ds_by_w.segment(sc.start, sc.dim);
        const Eigen::VectorXd u = lk + ahat * w_dz.segment(sc.start, sc.dim);
        // Jordan eigenvalues of v o u; only the scalar component is shifted.
        const double p0 = v.dot(u);
        const double r =
            (v[0] * u.tail(sc.dim - 1) + u[0] * v.tail(sc.dim - 1)).norm();
        double d = 0.0;
        if (p0 - r < lo) d += lo - (p0 - r);
        if (p0 + r > hi) d -= p0 + r - hi;
        corr[sc.start] += d;
        worst = std::max(worst, std::abs(d));
      }
      {
        const double pv = (tau_ + ahat * dtau) * (kap_ + ahat * dkap);
        const double d = pv < lo ? lo - pv : (pv > hi ? hi - pv : 0.0);
        corr_kap += d;
        worst = std::max(worst, std::abs(d));
      }
      if (worst == 0.0) break;
    }

    dx2 = best_dx;
    dy2 = best_dy;
    dz2 = best_dz;
    ds_by_w = best_ds_by_w;
    w_dz = best_w_dz;
    dtau = best_dtau;
    dkap = best_dkap;
    step = opt_.step_gamma * best_step;

    Eigen::VectorXd ds;
    apply_w(ds_by_w, ds);  // back to unscaled s-space

    x_ += step * dx2;
    y_ += step * dy2;
    z_ += step * dz2;
    s_ += step * ds;
    kap_ += step * dkap;
    tau_ += step * dtau;
  }

  finish(res, code);
  res.info.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace

SolveResult solve_socp(const SolverProblem& problem, const SolverOptions& opts) {
  HsdSolver solver(problem, opts);
  return solver.run();
}

KktResiduals kkt_residuals(const SolverProblem& P, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  KktResiduals r{};
  Eigen::VectorXd s = P.h - P.G * x;
  r.primal_eq = P.num_eq() > 0 ? (P.A * x - P.b).lpNorm<Eigen::Infinity>() : 0.0;

  const auto cone_violation = [&](const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (int i = 0; i < P.n_nonneg; ++i) worst = std::max(worst, -v[i]);
    int start = P.n_nonneg;
    for (int d : P.soc_dims) {
      worst = std::max(worst, v.segment(start + 1, d - 1).norm() - v[start]);
      start += d;
    }
    return worst;
  };
  r.cone_violation = cone_violation(s);
  r.dual_cone_violation = cone_violation(z);

  Eigen::VectorXd stat = P.c + P.G.transpose() * z;
  if (P.num_eq() > 0) stat += P.A.transpose() * y;
  r.dual_stationarity = stat.lpNorm<Eigen::Infinity>();
  r.comp_gap = s.dot(z);
  r.duality_gap = std::abs(P.c.dot(x) + (P.num_eq() > 0 ? P.b.dot(y) : 0.0) + P.h.dot(z));
  return r;
}

ProgramSolution solve_program(ConicProgram& prog, const SolverOptions& opts) {
  if (!prog.finalized()) prog.finalize();
  if (opts.equilibrate_sweeps > 0 && !prog.equilibrated()) prog.equilibrate(opts.equilibrate_sweeps);
  SolverProblem sp = make_solver_problem(prog);
  SolveResult r = solve_socp(sp, opts);

  ProgramSolution out;
  out.status = r.status;
  out.info = std::move(r.info);
  out.x = prog.unscale_solution(r.x);
  out.y = prog.unscale_duals(r.y);
  if (is_optimal(r.status))
    out.objective = prog.unscaled_objective(prog.objective().dot(r.x));
  else
    out.objective = std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace hytrain
