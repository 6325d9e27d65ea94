#ifndef SKD_PIPELINES_HPP
#define SKD_PIPELINES_HPP

#include <chrono>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "skd/errors.hpp"
#include "skd/matrix.hpp"
#include "skd/rng.hpp"
#include "skd/sampling.hpp"
#include "skd/solvers.hpp"

namespace skd {

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Sketch decompositions weight the sparse term by 1/sqrt(rows of the
// sketch). For short wide sketches the larger lambda it yields is what
// keeps uncorrupted low-rank mass out of the sparse side.
inline SolverConfig sketch_solver(SolverConfig cfg, Index rows) {
  if (cfg.lambda <= 0.0) cfg.lambda = 1.0 / std::sqrt(static_cast<double>(rows));
  return cfg;
}
}  // namespace detail

struct PipelineDiagnostics {
  int pcp_iterations = 0;
  double pcp_residual = 0.0;
  bool pcp_converged = true;
  Index sketch_rank = 0;
  bool rank_warning = false;  // sketch rank came in under the expected bound
  double seconds = 0.0;
};

// Assembled output of a sketched decomposition. L_hat is literally
// basis * representation and S_hat is literally D - L_hat, so the assembly
// identities hold by construction.
struct PipelineResult {
  SubspaceBasis basis;
  Matrix representation;
  Matrix L_hat;
  Matrix S_hat;
  IndexSet col_idx;
  IndexSet row_idx;
  PipelineDiagnostics diagnostics;
};

struct PipelineConfig {
  SolverConfig pcp;
  L1Config l1;
  double rank_tol = kDefaultRankTol;
};

namespace detail {
// Keep at most the `cap` leading directions: solver noise above the rank
// tolerance must not inflate a basis past the known rank bound.
inline SubspaceBasis cap_basis(SubspaceBasis basis, Index cap) {
  if (basis.dim() <= cap) return basis;
  return SubspaceBasis(basis.matrix().leftCols(cap));
}

inline PipelineResult assemble(const Matrix& d, SubspaceBasis basis, Matrix representation,
                               IndexSet col_idx, IndexSet row_idx, PipelineDiagnostics diag) {
  Matrix l_hat = basis.matrix() * representation;
  Matrix s_hat = d - l_hat;
  return PipelineResult{std::move(basis), std::move(representation), std::move(l_hat),
                        std::move(s_hat), std::move(col_idx), std::move(row_idx), diag};
}
}  // namespace detail

// Two-step decomposition with uniform sketches: recover the column space
// from m1 sampled columns, then read off each column's representation from
// m2 sampled rows.
inline PipelineResult decompose_uniform(const Matrix& d, Index m1, Index m2,
                                        const PipelineConfig& cfg, Rng rng) {
  auto t0 = std::chrono::steady_clock::now();
  require(m1 >= 1 && m1 <= d.cols(), "decompose_uniform: m1 out of range");
  require(m2 >= 1 && m2 <= d.rows(), "decompose_uniform: m2 out of range");

  IndexSet col_idx = uniform_indices(d.cols(), m1, rng.derive(1));
  Matrix d_s1 = select_columns(d, col_idx);
  Decomposition dec = pcp_alm(d_s1, detail::sketch_solver(cfg.pcp, d_s1.rows()));

  SubspaceBasis basis = orthonormal_range(dec.L_hat, cfg.rank_tol);

  IndexSet row_idx = uniform_indices(d.rows(), m2, rng.derive(2));
  Matrix u_s2 = select_rows(basis.matrix(), row_idx);
  if (numerical_rank(u_s2, 1e-10) < basis.dim())
    throw solver_error("row sketch lost rank; increase m2");
  Matrix q = l1_fit(u_s2, select_rows(d, row_idx), cfg.l1);

  PipelineDiagnostics diag;
  diag.pcp_iterations = dec.iterations;
  diag.pcp_residual = dec.primal_residual;
  diag.pcp_converged = dec.converged;
  diag.sketch_rank = basis.dim();
  diag.seconds = detail::seconds_since(t0);
  return detail::assemble(d, std::move(basis), std::move(q), std::move(col_idx),
                          std::move(row_idx), diag);
}

struct InformativeConfig {
  Index r_hat = 0;      // known rank upper bound
  int C_r = 5;          // row sketch holds C_r * r_hat rows
  int C = 3;            // spanning-set repeats for column/row selection
  bool use_alg3 = false;        // bootstrap the row sketch by alternating sampling
  bool refine_row_basis = true;   // re-derive the row basis from the kept sketch columns
  int refine_alternations = 2;    // robust-fit polish cycles on that basis
  double alg2_tau_rel = 1e-6;   // novelty threshold relative to the sketch norm
  Alg3Config alg3;              // only when use_alg3 (C_r/r_hat/pcp filled in here)
  SolverConfig pcp;
  L1Config l1;
  double rank_tol = kDefaultRankTol;
};

// Decomposition with informative sampling: learn which columns matter from
// a small row sketch, fit the column-space basis to those columns row by
// row, then pick informative rows of the basis for the representation fit.
inline PipelineResult decompose_informative(const Matrix& d, const InformativeConfig& cfg,
                                            Rng rng) {
  auto t0 = std::chrono::steady_clock::now();
  require(cfg.r_hat >= 1, "decompose_informative: r_hat must be positive");
  Index sketch_rows = static_cast<Index>(cfg.C_r) * cfg.r_hat;
  require(sketch_rows <= d.rows() && sketch_rows <= d.cols(),
          "decompose_informative: C_r * r_hat exceeds a data dimension");

  PipelineDiagnostics diag;

  IndexSet w_rows;
  if (cfg.use_alg3) {
    Alg3Config a3 = cfg.alg3;
    a3.C_r = cfg.C_r;
    a3.r_hat = cfg.r_hat;
    if (a3.pcp.lambda <= 0.0) a3.pcp = cfg.pcp;
    Alg3Result alg3 = alternating_sample(d, a3, rng.derive(1));
    diag.pcp_converged = diag.pcp_converged && !alg3.pcp_warning;
    w_rows = alg3.row_idx;
  } else {
    w_rows = uniform_indices(d.rows(), sketch_rows, rng.derive(1));
  }

  Matrix d_w = select_rows(d, w_rows);
  Decomposition dec_w = pcp_alm(d_w, detail::sketch_solver(cfg.pcp, d_w.rows()));
  diag.pcp_iterations = dec_w.iterations;
  diag.pcp_residual = dec_w.primal_residual;
  diag.pcp_converged = diag.pcp_converged && dec_w.converged;

  Index rank_w = numerical_rank(dec_w.L_hat, 1e-6);
  diag.rank_warning = rank_w < cfg.r_hat;

  Alg2Config a2;
  a2.repeats = cfg.C;
  a2.tau = cfg.alg2_tau_rel * dec_w.L_hat.norm();
  a2.per_repeat_cap = cfg.r_hat;
  IndexSet col_idx = informative_columns(dec_w.L_hat, a2, rng.derive(2));

  Matrix d_s1 = select_columns(d, col_idx);
  Matrix l_w_s = select_columns(dec_w.L_hat, col_idx);

  // Row basis of the kept sketch columns. The sketch decomposition can be
  // inexact on strongly clustered data, so optionally re-derive the basis
  // from the raw kept columns: a second decomposition pass, then a few
  // two-sided robust-fit cycles warm-started from the current basis.
  Matrix d_w_s = select_columns(d_w, col_idx);
  SubspaceBasis v_s1 = detail::cap_basis(
      [&]() {
        if (cfg.refine_row_basis) {
          Decomposition dec_s = pcp_alm(d_w_s, detail::sketch_solver(cfg.pcp, d_w_s.rows()));
          if (dec_s.converged && dec_s.L_hat.norm() > 0.0)
            return orthonormal_range(dec_s.L_hat.transpose(), cfg.rank_tol);
        }
        return orthonormal_range(l_w_s.transpose(), cfg.rank_tol);
      }(),
      cfg.r_hat);
  for (int cycle = 0; cfg.refine_row_basis && cycle < cfg.refine_alternations; ++cycle) {
    Matrix u_w_t = l1_fit(v_s1.matrix(), d_w_s.transpose(), cfg.l1);
    SubspaceBasis u_w =
        detail::cap_basis(orthonormal_range(u_w_t.transpose(), cfg.rank_tol), cfg.r_hat);
    Matrix v_t = l1_fit(u_w.matrix(), d_w_s, cfg.l1);
    v_s1 = detail::cap_basis(orthonormal_range(v_t.transpose(), cfg.rank_tol), cfg.r_hat);
  }

  // Basis fit, one row of the data at a time against the row-space basis.
  Matrix u_fit_t = l1_fit(v_s1.matrix(), d_s1.transpose(), cfg.l1);
  SubspaceBasis basis =
      detail::cap_basis(orthonormal_range(u_fit_t.transpose(), cfg.rank_tol), cfg.r_hat);
  diag.sketch_rank = basis.dim();

  Alg2Config a2_rows = a2;
  a2_rows.tau = cfg.alg2_tau_rel * basis.matrix().norm();
  IndexSet row_idx = informative_columns(basis.matrix().transpose(), a2_rows, rng.derive(3));

  Matrix u_s2 = select_rows(basis.matrix(), row_idx);
  if (numerical_rank(u_s2, 1e-10) < basis.dim())
    throw solver_error("row sketch lost rank; increase m2");
  Matrix q = l1_fit(u_s2, select_rows(d, row_idx), cfg.l1);

  diag.seconds = detail::seconds_since(t0);
  return detail::assemble(d, std::move(basis), std::move(q), std::move(col_idx),
                          std::move(row_idx), diag);
}

// ---------------------------------------------------------------------
// Online tracking
// ---------------------------------------------------------------------

struct OnlineConfig {
  int n_u = 4;     // refresh the basis every n_u pushes; 0 = never
  int n_s = 5;     // refit window holds n_s * r_hat columns
  int C_r = 5;     // the init batch must hold C_r * r_hat columns
  int C_rows = 20; // spanning-set repeats when sampling rows of the basis
  Index r_hat = 0;
  SolverConfig pcp;
  L1Config l1;
  double rank_tol = kDefaultRankTol;
  double alg2_tau_rel = 1e-6;
};

// Single-owner tracker state: the current basis, the rows it is sampled at,
// and the representation/sparse histories. A bounded window of raw columns
// is kept for the periodic basis refit.
class OnlineState {
 public:
  OnlineState(SubspaceBasis basis, IndexSet row_idx, Matrix rep_history, Matrix sparse_history,
              OnlineConfig cfg)
      : basis_(std::move(basis)),
        row_idx_(std::move(row_idx)),
        cfg_(std::move(cfg)),
        t_(rep_history.cols()) {
    for (Index j = 0; j < rep_history.cols(); ++j) rep_history_.push_back(rep_history.col(j));
    for (Index j = 0; j < sparse_history.cols(); ++j)
      sparse_history_.push_back(sparse_history.col(j));
  }

  const SubspaceBasis& basis() const { return basis_; }
  const IndexSet& row_idx() const { return row_idx_; }
  Index t() const { return t_; }
  const OnlineConfig& config() const { return cfg_; }

  Matrix rep_history() const { return pack(rep_history_); }
  Matrix sparse_history() const { return pack(sparse_history_); }

  friend std::pair<Vector, Vector> online_push(OnlineState& state, const Vector& d_t);
  friend OnlineState online_init(const Matrix& d0, const OnlineConfig& cfg, Rng rng);

 private:
  static Matrix pack(const std::vector<Vector>& cols) {
    if (cols.empty()) return Matrix();
    Matrix m(cols.front().size(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Index>(j)) = cols[j];
    return m;
  }

  SubspaceBasis basis_;
  IndexSet row_idx_;
  OnlineConfig cfg_;
  Index t_ = 0;
  int since_refresh_ = 0;
  std::vector<Vector> rep_history_;
  std::vector<Vector> sparse_history_;
  std::deque<Vector> window_;  // raw columns for the refit, newest last
  Rng sampler_rng_{0};

  void remember_raw(const Vector& d) {
    window_.push_back(d);
    std::size_t cap = static_cast<std::size_t>(cfg_.n_s) * static_cast<std::size_t>(cfg_.r_hat);
    while (window_.size() > cap) window_.pop_front();
  }

  void resample_rows(Rng rng) {
    Alg2Config a2;
    a2.repeats = cfg_.C_rows;
    a2.tau = cfg_.alg2_tau_rel * basis_.matrix().norm();
    a2.per_repeat_cap = cfg_.r_hat;
    row_idx_ = informative_columns(basis_.matrix().transpose(), a2, rng);
  }
};

// Builds the tracker from an initial batch: a full decomposition of the
// batch yields the starting basis and histories, and informative rows of
// the basis choose which entries future columns are read at.
inline OnlineState online_init(const Matrix& d0, const OnlineConfig& cfg, Rng rng) {
  require(cfg.r_hat >= 1 && cfg.r_hat < d0.rows(),
          "online_init: rank bound must sit below the column dimension");
  require(cfg.n_u >= 0 && cfg.n_s >= 1 && cfg.C_r >= 1 && cfg.C_rows >= 1,
          "online_init: invalid configuration");
  require(d0.cols() == static_cast<Index>(cfg.C_r) * cfg.r_hat,
          "online_init: the init batch must hold C_r * r_hat columns");

  Decomposition dec = pcp_alm(d0, detail::sketch_solver(cfg.pcp, d0.rows()));
  if (!dec.converged) throw solver_error("online_init: initialization decomposition did not converge");

  SubspaceBasis full = orthonormal_range(dec.L_hat, cfg.rank_tol);
  Index keep = std::min(full.dim(), cfg.r_hat);
  SubspaceBasis basis(full.matrix().leftCols(keep));

  Matrix rep = basis.matrix().transpose() * dec.L_hat;
  OnlineState state(basis, IndexSet::all(0), rep, dec.S_hat, cfg);
  state.sampler_rng_ = rng.derive(1);
  state.resample_rows(state.sampler_rng_.derive(0));
  for (Index j = 0; j < d0.cols(); ++j) state.remember_raw(d0.col(j));
  return state;
}

// Feeds one column: its representation is fit on the sampled rows only,
// the low-rank part is basis * q, and every n_u pushes the basis itself is
// refit over the raw-column window and the sampled rows are re-selected.
inline std::pair<Vector, Vector> online_push(OnlineState& state, const Vector& d_t) {
  const OnlineConfig& cfg = state.cfg_;
  require(d_t.size() == state.basis_.ambient_dim(), "online_push: column has the wrong length");

  Matrix u_rows = select_rows(state.basis_.matrix(), state.row_idx_);
  Vector d_rows = select_entries(d_t, state.row_idx_);
  Matrix q = l1_fit(u_rows, d_rows, cfg.l1);
  Vector l_t = state.basis_.matrix() * q.col(0);
  Vector s_t = d_t - l_t;

  state.rep_history_.push_back(q.col(0));
  state.sparse_history_.push_back(s_t);
  state.remember_raw(d_t);
  ++state.t_;
  ++state.since_refresh_;

  if (cfg.n_u > 0 && state.since_refresh_ >= cfg.n_u) {
    state.since_refresh_ = 0;
    Index w = static_cast<Index>(state.window_.size());
    Index r = state.basis_.dim();
    if (w >= r) {
      Matrix d_win(d_t.size(), w), q_win(r, w);
      for (Index j = 0; j < w; ++j) {
        d_win.col(j) = state.window_[static_cast<std::size_t>(j)];
        q_win.col(j) =
            state.rep_history_[state.rep_history_.size() - static_cast<std::size_t>(w - j)];
      }
      if (numerical_rank(q_win, 1e-10) == r) {
        Matrix u_fit_t = l1_fit(q_win.transpose(), d_win.transpose(), cfg.l1);
        Matrix u_fit = u_fit_t.transpose();
        if (u_fit.norm() > 0.0) {
          SubspaceBasis fresh = orthonormal_range(u_fit, cfg.rank_tol);
          // Re-express the stored representations in the new coordinates so
          // the next refit window stays consistent with the basis.
          Matrix map = fresh.matrix().transpose() * u_fit;
          for (auto& col : state.rep_history_) col = map * col;
          state.basis_ = std::move(fresh);
          state.resample_rows(state.sampler_rng_.derive(static_cast<std::uint64_t>(state.t_)));
        }
      }
    }
  }
  return {l_t, s_t};
}

}  // namespace skd

#endif  // SKD_PIPELINES_HPP
