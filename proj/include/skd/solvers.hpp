#ifndef SKD_SOLVERS_HPP
#define SKD_SOLVERS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "skd/errors.hpp"
#include "skd/matrix.hpp"
#include "skd/parallel.hpp"

namespace skd {

// ---------------------------------------------------------------------
// Principal component pursuit:  min  lambda*|S|_1 + |L|_*   s.t. L + S = D,
// solved with the inexact augmented Lagrangian scheme (one singular-value
// thresholding step and one soft-thresholding step per outer iteration).
// ---------------------------------------------------------------------

struct SolverConfig {
  double lambda = 0.0;        // <= 0: use 1/sqrt(rows of D)
  double tol = 1e-7;          // relative primal residual target
  double move_tol = 1e-6;     // also require mu*|S_k - S_{k-1}|_F / |D|_F below this
  int max_iter = 1000;
  double mu_init = 0.0;       // <= 0: use 1.25 / |D|_2
  double mu_growth = 1.5;     // must be > 1
  double mu_max_factor = 1e7; // mu is capped at mu_max_factor * mu_init
};

struct Decomposition {
  Matrix L_hat;
  Matrix S_hat;
  int iterations = 0;
  double primal_residual = 0.0;  // |D - L - S|_F / |D|_F, recomputed on exit
  bool converged = false;
};

inline double soft_shrink(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

inline Matrix soft_threshold(const Matrix& m, double t) {
  return m.unaryExpr([t](double x) { return soft_shrink(x, t); });
}

// Soft-thresholds the singular values and reconstructs.
inline Matrix sv_threshold(const Matrix& m, double t) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector sigma = svd.singularValues();
  for (Index i = 0; i < sigma.size(); ++i) sigma[i] = soft_shrink(sigma[i], t);
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

namespace detail {

// Shared ALM loop. `eps_abs` is an absolute slack on |D - L - S|_F; zero
// recovers the exactly-constrained program.
inline Decomposition pcp_alm_core(const Matrix& d, SolverConfig cfg, double eps_abs) {
  require(d.size() > 0, "pcp: empty matrix");
  double norm_d = d.norm();
  require(norm_d > 0.0, "pcp: zero matrix");
  require(cfg.tol > 0.0, "pcp: tol must be positive");
  require(cfg.mu_growth > 1.0, "pcp: mu_growth must exceed 1");
  require(cfg.max_iter >= 1, "pcp: max_iter must be positive");

  double lambda = cfg.lambda > 0.0 ? cfg.lambda : 1.0 / std::sqrt(static_cast<double>(d.rows()));
  double norm2 = spectral_norm_estimate(d);
  double mu = cfg.mu_init > 0.0 ? cfg.mu_init : 1.25 / norm2;
  double mu_max = cfg.mu_max_factor * mu;
  double target = eps_abs + cfg.tol * norm_d;

  Decomposition out;
  out.L_hat = Matrix::Zero(d.rows(), d.cols());
  out.S_hat = Matrix::Zero(d.rows(), d.cols());
  if (norm_d <= target) {  // zero components already feasible
    out.converged = true;
    out.primal_residual = 1.0;
    return out;
  }

  // Dual ascent start scaled by the dual norm of D.
  double dual_norm = std::max(norm2, d.cwiseAbs().maxCoeff() / lambda);
  Matrix y = d / dual_norm;

  Matrix& l = out.L_hat;
  Matrix& s = out.S_hat;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    Matrix gl = d - s + y / mu;
    Eigen::BDCSVD<Matrix> svd(gl, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector sigma = svd.singularValues();
    Index kept = 0;
    for (Index i = 0; i < sigma.size(); ++i) {
      sigma[i] = soft_shrink(sigma[i], 1.0 / mu);
      if (sigma[i] > 0.0) ++kept;
    }
    l.noalias() = svd.matrixU().leftCols(kept) * sigma.head(kept).asDiagonal() *
                  svd.matrixV().leftCols(kept).transpose();

    Matrix s_old = std::move(s);
    s = soft_threshold(d - l + y / mu, lambda / mu);
    double moved = mu * (s - s_old).norm() / norm_d;

    Matrix r = d - l - s;
    y.noalias() += mu * r;
    out.iterations = it;
    // A near-feasible pair can show up long before the split settles, so
    // the iterate movement has to come down as well before stopping.
    if (r.norm() <= target && moved <= cfg.move_tol) {
      out.converged = true;
      break;
    }
    // Raise the penalty only once the split has settled at the current
    // level; racing ahead freezes the iteration at a suboptimal split.
    if (moved <= cfg.move_tol) mu = std::min(mu * cfg.mu_growth, mu_max);
  }
  out.primal_residual = (d - out.L_hat - out.S_hat).norm() / norm_d;
  return out;
}

}  // namespace detail

inline Decomposition pcp_alm(const Matrix& d, SolverConfig cfg = {}) {
  return detail::pcp_alm_core(d, cfg, 0.0);
}

// Noise-tolerant variant: stops once |L + S - D|_F <= eps_n + tol*|D|_F,
// leaving the noise in the residual. If the iteration budget runs out
// first, the leftover residual beyond the budget is folded into S so the
// returned pair always satisfies the bound.
inline Decomposition stable_pcp(const Matrix& d, SolverConfig cfg, double eps_n) {
  require(eps_n >= 0.0, "stable_pcp: eps_n must be nonnegative");
  Decomposition out = detail::pcp_alm_core(d, cfg, eps_n);
  double target = eps_n + cfg.tol * d.norm();
  Matrix r = d - out.L_hat - out.S_hat;
  double rn = r.norm();
  if (rn > target) {
    out.S_hat += r * (1.0 - target / rn);
    out.primal_residual = (d - out.L_hat - out.S_hat).norm() / d.norm();
  }
  return out;
}

// ---------------------------------------------------------------------
// Column-wise least absolute deviations:  min_X sum_j |b_j - A x_j|_1.
// ADMM does the bulk of the work; a vertex snap onto the rows with the
// smallest residuals finishes the job exactly when the optimum is a
// nondegenerate basic solution.
// ---------------------------------------------------------------------

struct L1Config {
  double opt_tol = 1e-6;   // subgradient certificate target |A^T s|_inf
  double rho = 1.0;        // ADMM penalty on the normalized problem
  int max_iter = 1500;     // total ADMM iteration budget per column
  int chunk = 75;          // certificate is tried every `chunk` iterations
  int threads = 1;         // independent columns may run in parallel
};

// Best achievable certificate value for x as a minimizer of |b - A x|_1:
// picks a subgradient s of the residual's l1-norm and reports |A^T s|_inf,
// optimizing the free components (those at zero residuals) over [-1,1].
// Exact minimizers admit values near zero. Stops early once the value
// drops below `early_exit`.
inline double l1_certificate(const Matrix& a, const Vector& b, const Vector& x,
                             double early_exit = 0.0) {
  Index m = a.rows(), r = a.cols();
  Vector res = b - a * x;
  double scale = std::max({b.cwiseAbs().maxCoeff(), (a * x).cwiseAbs().maxCoeff(),
                           std::numeric_limits<double>::min()});
  double ztol = 1e-9 * scale;
  std::vector<Index> zero_rows;
  Vector c = Vector::Zero(r);
  for (Index i = 0; i < m; ++i) {
    if (std::abs(res[i]) <= ztol)
      zero_rows.push_back(i);
    else
      c += (res[i] > 0 ? 1.0 : -1.0) * a.row(i).transpose();
  }
  if (zero_rows.empty()) return c.cwiseAbs().maxCoeff();

  Index nz = static_cast<Index>(zero_rows.size());
  Matrix az(nz, r);
  for (Index k = 0; k < nz; ++k) az.row(k) = a.row(zero_rows[static_cast<std::size_t>(k)]);

  if (nz == r) {  // unique sign choice: solve A_Z^T s = -c directly
    Eigen::ColPivHouseholderQR<Matrix> qr(az.transpose());
    if (qr.rank() == r) {
      Vector s = qr.solve(-c);
      if (s.cwiseAbs().maxCoeff() <= 1.0 + 1e-9) {
        for (Index i = 0; i < s.size(); ++i) s[i] = std::clamp(s[i], -1.0, 1.0);
        return (az.transpose() * s + c).cwiseAbs().maxCoeff();
      }
    }
  }

  // Start from the minimum-norm solution of A_Z^T s = -c, then enforce the
  // box with projected gradient steps on 0.5*|A_Z^T s + c|^2.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(az.transpose());
  Vector s = cod.solve(-c);
  for (Index i = 0; i < s.size(); ++i) s[i] = std::clamp(s[i], -1.0, 1.0);
  double lip = spectral_norm_estimate(az);
  lip = std::max(lip * lip, std::numeric_limits<double>::min());
  double best = std::numeric_limits<double>::max();
  for (int it = 0; it < 1500; ++it) {
    Vector g = az.transpose() * s + c;
    double val = g.cwiseAbs().maxCoeff();
    best = std::min(best, val);
    if (best <= early_exit || val <= 1e-14) break;
    Vector step = s - (az * g) / lip;
    for (Index i = 0; i < step.size(); ++i) step[i] = std::clamp(step[i], -1.0, 1.0);
    if ((step - s).norm() <= 1e-16) break;
    s = step;
  }
  return best;
}

namespace detail {

struct L1Workspace {
  Matrix a;
  Matrix qthin;  // m x r, orthonormal columns
  Matrix rtri;   // r x r, upper triangular
  explicit L1Workspace(const Matrix& a_in) : a(a_in) {
    Eigen::HouseholderQR<Matrix> qr(a);
    qthin = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    rtri = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  }
  Vector solve_ls(const Vector& v) const {
    return rtri.triangularView<Eigen::Upper>().solve(qthin.transpose() * v);
  }
};

inline double l1_norm(const Vector& v) { return v.lpNorm<1>(); }

// `iters` ADMM steps for min |a x - b|_1, warm-started through z/u.
inline void l1_admm(const L1Workspace& w, const Vector& b, double rho, int iters,
                    Vector& x, Vector& z, Vector& u) {
  const Matrix& a = w.a;
  Vector ax(a.rows());
  for (int it = 0; it < iters; ++it) {
    x = w.solve_ls(b + z - u);
    ax.noalias() = a * x;
    z = (ax - b + u).unaryExpr([rho](double v) { return soft_shrink(v, 1.0 / rho); });
    u += ax - b - z;
  }
}

// Snap to the basic solution that interpolates the currently smallest
// residuals; keep it only if the objective does not get worse.
inline void l1_polish(const Matrix& a, const Vector& b, Vector& x) {
  Index m = a.rows(), r = a.cols();
  if (m <= r) return;
  Vector res = b - a * x;
  std::vector<Index> order(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&res](Index i, Index j) { return std::abs(res[i]) < std::abs(res[j]); });
  Matrix az(r, r);
  Vector bz(r);
  for (Index k = 0; k < r; ++k) {
    az.row(k) = a.row(order[static_cast<std::size_t>(k)]);
    bz[k] = b[order[static_cast<std::size_t>(k)]];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(az);
  if (qr.rank() < r) return;
  Vector xv = qr.solve(bz);
  double obj = l1_norm(res);
  double obj_v = l1_norm(b - a * xv);
  if (obj_v <= obj + 1e-12 * std::max(1.0, obj)) x = xv;
}

inline Vector l1_fit_column(const L1Workspace& w, const Vector& b, const L1Config& cfg) {
  const Matrix& a = w.a;
  double scale = b.norm();
  if (scale == 0.0) return Vector::Zero(a.cols());
  Vector bn = b / scale;
  if (a.rows() == a.cols()) return scale * w.solve_ls(bn);  // interpolation

  Vector x = w.solve_ls(bn);  // least-squares start
  Vector z = Vector::Zero(a.rows());
  Vector u = Vector::Zero(a.rows());
  Vector best_x = x;
  double best_obj = std::numeric_limits<double>::max();
  int done = 0;
  while (done < cfg.max_iter) {
    int step = std::min(cfg.chunk, cfg.max_iter - done);
    l1_admm(w, bn, cfg.rho, step, x, z, u);
    done += step;
    Vector xp = x;
    l1_polish(a, bn, xp);
    double obj = l1_norm(bn - a * xp);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = xp;
    }
    if (l1_certificate(a, bn, best_x, cfg.opt_tol) <= cfg.opt_tol) break;
  }
  return scale * best_x;
}

}  // namespace detail

// min_X sum_j |b_j - A x_j|_1, columns independent (and parallelizable
// without changing the result).
inline Matrix l1_fit(const Matrix& a, const Matrix& b, const L1Config& cfg = {}) {
  require(a.rows() == b.rows(), "l1_fit: row count mismatch");
  if (a.rows() < a.cols() || a.cols() == 0 || numerical_rank(a, 1e-10) < a.cols())
    throw precondition_error("design matrix rank-deficient");
  detail::L1Workspace w(a);
  Matrix x(a.cols(), b.cols());
  parallel_for(b.cols(), cfg.threads,
               [&](Index j) { x.col(j) = detail::l1_fit_column(w, b.col(j), cfg); });
  return x;
}

// Noise-budgeted variant: min |B - A X - E|_1 with |E|_F <= delta_n, by
// alternating the exact X-step with the exact E-step (clamping at a level
// found by bisection on the Frobenius budget).
inline std::pair<Matrix, Matrix> l1_fit_noisy(const Matrix& a, const Matrix& b, double delta_n,
                                              const L1Config& cfg = {}) {
  require(delta_n >= 0.0, "l1_fit_noisy: delta_n must be nonnegative");
  if (delta_n == 0.0) return {l1_fit(a, b, cfg), Matrix::Zero(b.rows(), b.cols())};

  auto clamp_to_budget = [delta_n](const Matrix& r) {
    if (r.norm() <= delta_n) return r;
    double lo = 0.0, hi = r.cwiseAbs().maxCoeff();
    for (int it = 0; it < 200; ++it) {
      double t = 0.5 * (lo + hi);
      double n = r.unaryExpr([t](double v) { return std::clamp(v, -t, t); }).norm();
      (n > delta_n ? hi : lo) = t;
    }
    double t = 0.5 * (lo + hi);
    return Matrix(r.unaryExpr([t](double v) { return std::clamp(v, -t, t); }));
  };

  Matrix e = Matrix::Zero(b.rows(), b.cols());
  Matrix x;
  double prev_obj = std::numeric_limits<double>::max();
  for (int it = 0; it < 30; ++it) {
    x = l1_fit(a, b - e, cfg);
    e = clamp_to_budget(b - a * x);
    double obj = (b - a * x - e).lpNorm<1>();
    if (prev_obj - obj <= 1e-10 * std::max(1.0, prev_obj)) break;
    prev_obj = obj;
  }
  return {x, e};
}

// ---------------------------------------------------------------------
// Null-space route to the same vector decomposition: the minimum-l1 z with
// P^T z = P^T d, where P spans the orthogonal complement of the basis.
// Used as an independent check against l1_fit.
// ---------------------------------------------------------------------

inline Vector bp_residual_oracle(const SubspaceBasis& basis, const Vector& d,
                                 const L1Config& cfg = {}) {
  const Matrix& u = basis.matrix();
  require(u.cols() < u.rows(), "complement is empty");
  require(d.size() == u.rows(), "bp_residual_oracle: dimension mismatch");
  Index m = u.rows(), r = u.cols();

  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ();
  Matrix p = q.rightCols(m - r);  // orthonormal complement basis

  Vector h = p.transpose() * d;
  double scale = h.norm();
  if (scale <= 1e-14 * std::max(1.0, d.norm())) return Vector::Zero(m);
  Vector hn = h / scale;

  auto project = [&](const Vector& v) -> Vector { return v - p * (p.transpose() * v - hn); };

  Vector z = Vector::Zero(m), dual = Vector::Zero(m), v = Vector::Zero(m);
  double rho = cfg.rho;
  for (int it = 0; it < 3000; ++it) {
    v = project(z - dual);
    Vector z_old = z;
    z = (v + dual).unaryExpr([rho](double w) { return soft_shrink(w, 1.0 / rho); });
    dual += v - z;
    if ((v - z).norm() <= 1e-13 && (z - z_old).norm() <= 1e-13) break;
  }
  Vector out = project(z);  // feasible by construction

  // Support polish: resolve on the detected support with a min-norm solve.
  double stol = 1e-7 * std::max(out.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Index> support;
  for (Index i = 0; i < m; ++i)
    if (std::abs(z[i]) > stol) support.push_back(i);
  if (!support.empty() && static_cast<Index>(support.size()) <= m - r) {
    Matrix ps(m - r, static_cast<Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k)
      ps.col(static_cast<Index>(k)) = p.row(support[k]).transpose();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ps);
    Vector zs = cod.solve(hn);
    if ((ps * zs - hn).norm() <= 1e-10) {
      Vector cand = Vector::Zero(m);
      for (std::size_t k = 0; k < support.size(); ++k) cand[support[k]] = zs[static_cast<Index>(k)];
      if (cand.lpNorm<1>() <= out.lpNorm<1>() + 1e-12) out = cand;
    }
  }
  return scale * out;
}

}  // namespace skd

#endif  // SKD_SOLVERS_HPP
