#ifndef SKD_SAMPLING_HPP
#define SKD_SAMPLING_HPP

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "skd/errors.hpp"
#include "skd/matrix.hpp"
#include "skd/rng.hpp"
#include "skd/solvers.hpp"

namespace skd {

// m distinct indices from [0, n), each m-subset equally likely.
inline IndexSet uniform_indices(Index n, Index m, Rng rng) {
  require(m >= 0 && m <= n, "uniform_indices: m must be at most n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    std::size_t j = static_cast<std::size_t>(k) +
                    static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(k)]);
  }
  return IndexSet(std::move(out), n);
}

// Extends idx by n_extra uniform indices drawn from its complement.
inline IndexSet augment_random(const IndexSet& idx, Index n_extra, Rng rng) {
  require(n_extra >= 0 && idx.size() + n_extra <= idx.domain_size(),
          "augment_random: not enough remaining indices");
  std::vector<Index> pool = idx.complement();
  std::vector<Index> out = idx.indices();
  Index n = static_cast<Index>(pool.size());
  for (Index k = 0; k < n_extra; ++k) {
    std::size_t j = static_cast<std::size_t>(k) +
                    static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(k)]);
  }
  return IndexSet(std::move(out), idx.domain_size());
}

struct Alg2Config {
  int repeats = 1;            // C: how many spanning sets to collect
  std::optional<double> tau;  // novelty threshold; unset: 1e-8 * |A|_F
  Index per_repeat_cap = 0;   // 0: unlimited; pipelines cap at the rank bound
  bool leverage_seed = false; // seed by leverage scores instead of uniformly
  double rank_tol = kDefaultRankTol;  // only for leverage seeding
};

// Greedy spanning-set sampler. Each repeat seeds with a random nonzero
// column, then keeps appending the column with the largest residual after
// projecting out the span collected so far, as long as that residual norm
// clears tau. Columns already taken are zeroed out between repeats, so the
// union holds `repeats` near-independent spanning sets, in selection order.
inline IndexSet informative_columns(const Matrix& a, const Alg2Config& cfg, Rng rng) {
  require(cfg.repeats >= 1, "informative_columns: repeats must be >= 1");
  Index n1 = a.rows(), n2 = a.cols();
  double tau = cfg.tau ? *cfg.tau : 1e-8 * a.norm();
  require(tau > 0.0, "informative_columns: tau must be positive");

  bool any_nonzero = false;
  for (Index j = 0; j < n2 && !any_nonzero; ++j) any_nonzero = a.col(j).norm() > 0.0;
  if (!any_nonzero) throw precondition_error("no nonzero columns");

  Matrix b = a;
  std::vector<Index> picked;
  std::vector<bool> taken(static_cast<std::size_t>(n2), false);

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    std::vector<Index> candidates;
    for (Index j = 0; j < n2; ++j)
      if (!taken[static_cast<std::size_t>(j)] && b.col(j).norm() > 0.0) candidates.push_back(j);
    if (candidates.empty()) break;  // nothing novel left to sample

    Index seed;
    if (cfg.leverage_seed) {
      SvdCompact svd = svd_compact(b, cfg.rank_tol);
      Matrix v = svd.V.matrix().leftCols(svd.rank);
      std::vector<double> w;
      double total = 0.0;
      for (Index j : candidates) {
        double lv = v.row(j).squaredNorm();
        w.push_back(lv);
        total += lv;
      }
      double pick = rng.uniform01() * total;
      std::size_t k = 0;
      for (; k + 1 < w.size(); ++k) {
        pick -= w[k];
        if (pick <= 0.0) break;
      }
      seed = candidates[k];
    } else {
      seed = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
    }

    picked.push_back(seed);
    taken[static_cast<std::size_t>(seed)] = true;
    Index picked_this_rep = 1;

    // Residuals of all columns against the span collected this repeat,
    // updated by rank-one deflation. The accumulated directions are kept
    // for one re-projection pass per new direction to hold orthogonality.
    Matrix e = b;
    Matrix basis(n1, 0);
    auto deflate = [&](Index col, double norm) {
      Vector q = e.col(col) / norm;
      if (basis.cols() > 0) {
        q -= basis * (basis.transpose() * q);
        double qn = q.norm();
        if (qn == 0.0) return;
        q /= qn;
      }
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = q;
      e -= q * (q.transpose() * e);
    };
    deflate(seed, b.col(seed).norm());

    while (cfg.per_repeat_cap == 0 || picked_this_rep < cfg.per_repeat_cap) {
      Index best = -1;
      double best_norm = -1.0;
      for (Index j = 0; j < n2; ++j) {
        if (taken[static_cast<std::size_t>(j)]) continue;
        double nrm = e.col(j).norm();
        if (nrm > best_norm) {
          best_norm = nrm;
          best = j;
        }
      }
      if (best < 0 || best_norm < tau) break;
      picked.push_back(best);
      taken[static_cast<std::size_t>(best)] = true;
      ++picked_this_rep;
      deflate(best, best_norm);
    }

    for (Index j : picked) b.col(j).setZero();
  }
  return IndexSet(std::move(picked), n2);
}

struct Alg3Config {
  int C_r = 3;          // repeats for the inner spanning-set sampler
  Index r_hat = 0;      // known rank upper bound
  int T = 2;            // stop after this many cycles with unchanged rank
  int max_cycles = 10;
  SolverConfig pcp;
  std::optional<double> tau;  // forwarded to the inner sampler
  double rank_tol = 1e-6;     // numerical rank threshold for the trace
};

struct Alg3Result {
  IndexSet row_idx;
  IndexSet col_idx;
  Matrix L_w_hat;                 // low-rank component of the final row sketch
  std::vector<Index> rank_trace;  // rank of the row sketch per cycle, as observed
  bool pcp_warning = false;       // some inner decomposition did not converge
};

// Alternating row/column sampling for data whose rows *and* columns
// cluster. Each cycle decomposes the current row sketch, picks informative
// columns from its low-rank part, decomposes that column sketch, and picks
// informative rows for the next cycle. Stops when the sketch rank stops
// changing for T consecutive cycles.
inline Alg3Result alternating_sample(const Matrix& d, const Alg3Config& cfg, Rng rng) {
  require(cfg.r_hat >= 1, "alternating_sample: r_hat must be positive");
  require(cfg.T >= 2, "alternating_sample: T must be at least 2");
  require(cfg.max_cycles >= 1, "alternating_sample: max_cycles must be positive");
  Index sketch = static_cast<Index>(cfg.C_r) * cfg.r_hat;
  require(sketch <= d.rows() && sketch <= d.cols(),
          "alternating_sample: C_r * r_hat exceeds a data dimension");

  Alg3Result out;
  out.row_idx = uniform_indices(d.rows(), sketch, rng.derive(0));

  Alg2Config a2;
  a2.repeats = cfg.C_r;
  a2.tau = cfg.tau;
  a2.per_repeat_cap = cfg.r_hat;

  // The solver's leftover noise has to sit well below the rank threshold
  // it feeds, or the trace reads phantom directions.
  SolverConfig pcp = cfg.pcp;
  pcp.tol = std::min(pcp.tol, 1e-3 * cfg.rank_tol);
  pcp.move_tol = std::min(pcp.move_tol, 1e-2 * cfg.rank_tol);
  int streak = 0;
  Index prev_rank = -1;
  for (int cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
    Matrix d_w = select_rows(d, out.row_idx);
    Decomposition dec_w = pcp_alm(d_w, pcp);  // lambda defaults to 1/sqrt(rows)
    out.pcp_warning = out.pcp_warning || !dec_w.converged;
    out.L_w_hat = dec_w.L_hat;

    Index rank = numerical_rank(out.L_w_hat, cfg.rank_tol);
    out.rank_trace.push_back(rank);
    streak = (rank == prev_rank) ? streak + 1 : 1;
    prev_rank = rank;

    out.col_idx = informative_columns(out.L_w_hat, a2, rng.derive(2 * cycle));
    if (streak >= cfg.T || cycle == cfg.max_cycles) break;

    Matrix d_c = select_columns(d, out.col_idx);
    Decomposition dec_c = pcp_alm(d_c, pcp);
    out.pcp_warning = out.pcp_warning || !dec_c.converged;

    out.row_idx = informative_columns(dec_c.L_hat.transpose(), a2, rng.derive(2 * cycle + 1));
  }
  return out;
}

}  // namespace skd

#endif  // SKD_SAMPLING_HPP
