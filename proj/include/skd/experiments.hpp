#ifndef SKD_EXPERIMENTS_HPP
#define SKD_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skd/datagen.hpp"
#include "skd/errors.hpp"
#include "skd/matrix.hpp"
#include "skd/parallel.hpp"
#include "skd/pipelines.hpp"
#include "skd/rng.hpp"
#include "skd/sampling.hpp"
#include "skd/solvers.hpp"

namespace skd {

inline double relative_error(const Matrix& truth, const Matrix& estimate) {
  return (truth - estimate).norm() / truth.norm();
}

// ---------------------------------------------------------------------
// Phase transition grid: recovery success rate of the uniform pipeline
// over a grid of sketch sizes.
// ---------------------------------------------------------------------

struct PhaseParams {
  Index n1 = 400, n2 = 400, r = 5;
  double rho = 0.02;
  double amplitude = 1.0;
  std::vector<Index> m1_list, m2_list;
  int trials = 10;
  double criterion = 5e-3;  // success: |L - L_hat|_F / |L|_F below this
  PipelineConfig pipeline;
  int threads = 1;
};

struct GridResult {
  std::vector<Index> m1_values, m2_values;
  Matrix success_rate;  // m1 along rows, m2 along columns, entries in [0,1]
  int trials = 0;
  double criterion = 0.0;
};

inline GridResult run_phase_transition(const PhaseParams& p, Rng rng) {
  require(p.trials >= 1, "run_phase_transition: trials must be positive");
  require(!p.m1_list.empty() && !p.m2_list.empty(), "run_phase_transition: empty grid");
  GridResult out;
  out.m1_values = p.m1_list;
  out.m2_values = p.m2_list;
  out.trials = p.trials;
  out.criterion = p.criterion;
  Index rows = static_cast<Index>(p.m1_list.size());
  Index cols = static_cast<Index>(p.m2_list.size());
  out.success_rate = Matrix::Zero(rows, cols);

  Index cells = rows * cols;
  std::vector<char> won(static_cast<std::size_t>(cells * p.trials), 0);
  parallel_for(cells * p.trials, p.threads, [&](Index task) {
    Index cell = task / p.trials;
    Index i = cell / cols, j = cell % cols;
    Rng local = rng.derive(static_cast<std::uint64_t>(task) + 1);
    ProblemInstance inst = make_gaussian_instance(p.n1, p.n2, p.r, p.rho, p.amplitude,
                                                  local.derive(0).seed());
    try {
      PipelineResult res = decompose_uniform(inst.D, p.m1_list[static_cast<std::size_t>(i)],
                                             p.m2_list[static_cast<std::size_t>(j)], p.pipeline,
                                             local.derive(1));
      won[static_cast<std::size_t>(task)] =
          relative_error(inst.L, res.L_hat) <= p.criterion ? 1 : 0;
    } catch (const std::exception&) {
      // solver failures count as unsuccessful trials
    }
  });
  for (Index task = 0; task < cells * p.trials; ++task) {
    Index cell = task / p.trials;
    if (won[static_cast<std::size_t>(task)])
      out.success_rate(cell / cols, cell % cols) += 1.0;
  }
  out.success_rate /= static_cast<double>(p.trials);
  return out;
}

// ---------------------------------------------------------------------
// Sampling strategy comparison on clustered data: informative pipeline vs
// a uniform-uniform baseline at equal per-side budgets.
// ---------------------------------------------------------------------

struct CompareParams {
  Index n1 = 500;
  Index total_cols = 1050;
  Index r = 20;
  int clusters = 20;
  double loud_scale = 13.0;
  double big_weight = 130.0, small_weight = 10.0;
  double rho = 0.02;
  double amplitude = 1.0;
  std::vector<Index> m_list;  // per-side budgets
  int trials = 10;
  double criterion = 0.01;
  InformativeConfig informative;  // r_hat/C filled per budget
  PipelineConfig uniform;
  int threads = 1;
};

struct CompareRow {
  Index m = 0;
  std::string method;
  double avg_error = 0.0;
  int successes = 0;
  int trials = 0;
  bool success = false;  // average error below the criterion
};

inline std::vector<CompareRow> run_sampling_comparison(const CompareParams& p, Rng rng) {
  require(p.trials >= 1, "run_sampling_comparison: trials must be positive");
  std::vector<CompareRow> rows;
  for (std::size_t mi = 0; mi < p.m_list.size(); ++mi) {
    Index m = p.m_list[mi];
    CompareRow inf_row{m, "informative", 0.0, 0, p.trials, false};
    CompareRow uni_row{m, "uniform-baseline", 0.0, 0, p.trials, false};
    std::vector<double> inf_err(static_cast<std::size_t>(p.trials), 1.0);
    std::vector<double> uni_err(static_cast<std::size_t>(p.trials), 1.0);

    parallel_for(p.trials, p.threads, [&](Index t) {
      Rng local = rng.derive(mi * 1000 + static_cast<std::uint64_t>(t));
      ProblemInstance inst =
          make_clustered_instance(p.n1, p.total_cols, p.r, p.clusters, p.loud_scale,
                                  p.big_weight, p.small_weight, p.rho, p.amplitude,
                                  local.derive(0).seed());
      InformativeConfig icfg = p.informative;
      icfg.r_hat = p.r;
      icfg.C = std::max(1, static_cast<int>((m + p.r - 1) / p.r));  // budget ≈ C * r per side
      try {
        PipelineResult res = decompose_informative(inst.D, icfg, local.derive(1));
        inf_err[static_cast<std::size_t>(t)] = relative_error(inst.L, res.L_hat);
      } catch (const std::exception&) {
      }
      try {
        PipelineResult res = decompose_uniform(inst.D, m, m, p.uniform, local.derive(2));
        uni_err[static_cast<std::size_t>(t)] = relative_error(inst.L, res.L_hat);
      } catch (const std::exception&) {
      }
    });

    for (int t = 0; t < p.trials; ++t) {
      inf_row.avg_error += inf_err[static_cast<std::size_t>(t)] / p.trials;
      uni_row.avg_error += uni_err[static_cast<std::size_t>(t)] / p.trials;
      inf_row.successes += inf_err[static_cast<std::size_t>(t)] < p.criterion ? 1 : 0;
      uni_row.successes += uni_err[static_cast<std::size_t>(t)] < p.criterion ? 1 : 0;
    }
    inf_row.success = inf_row.avg_error < p.criterion;
    uni_row.success = uni_row.avg_error < p.criterion;
    rows.push_back(inf_row);
    rows.push_back(uni_row);
  }
  return rows;
}

// ---------------------------------------------------------------------
// Alternating sampling rank trace on doubly clustered data.
// ---------------------------------------------------------------------

struct Alg3TraceParams {
  Index n = 500;
  Index r = 20;
  int clusters = 10;
  double rho = 0.0;  // the reference experiment keeps the sparse part zero
  double amplitude = 1.0;
  int C = 3;
  int trials = 10;
  int max_cycles = 10;
  int T = 2;
  SolverConfig pcp;
};

struct Alg3TraceRow {
  int trial = 0;
  int cycle = 0;
  Index rank = 0;
};

inline std::vector<Alg3TraceRow> run_alg3_trace(const Alg3TraceParams& p, Rng rng) {
  require(p.trials >= 1, "run_alg3_trace: trials must be positive");
  std::vector<Alg3TraceRow> rows;
  for (int t = 0; t < p.trials; ++t) {
    Rng local = rng.derive(static_cast<std::uint64_t>(t));
    ProblemInstance inst =
        make_doubly_clustered_instance(p.n, p.r, p.clusters, p.rho, p.amplitude,
                                       local.derive(0).seed());
    Alg3Config cfg;
    cfg.C_r = p.C;
    cfg.r_hat = p.r;
    cfg.T = p.T;
    cfg.max_cycles = p.max_cycles;
    cfg.pcp = p.pcp;
    Alg3Result res = alternating_sample(inst.D, cfg, local.derive(1));
    for (std::size_t c = 0; c < res.rank_trace.size(); ++c)
      rows.push_back(Alg3TraceRow{t, static_cast<int>(c) + 1, res.rank_trace[c]});
  }
  return rows;
}

// ---------------------------------------------------------------------
// Online tracking error curve.
// ---------------------------------------------------------------------

struct OnlineTrackRow {
  Index t = 0;
  double normalized_error = 0.0;  // column error over the average column norm
};

inline std::vector<OnlineTrackRow> run_online_track(const StreamSpec& spec,
                                                    const OnlineConfig& cfg, Rng rng) {
  Index init_cols = static_cast<Index>(cfg.C_r) * cfg.r_hat;
  require(spec.n2 > init_cols, "run_online_track: stream shorter than the init batch");

  ColumnStream stream(spec, rng.derive(1));
  Matrix d0(spec.n1, init_cols);
  std::vector<Vector> truth;
  for (Index j = 0; j < init_cols; ++j) {
    ColumnStream::Column c = stream.next();
    d0.col(j) = c.d;
    truth.push_back(c.l_true);
  }
  OnlineState state = online_init(d0, cfg, rng.derive(2));

  std::vector<Vector> recovered;
  while (!stream.done()) {
    ColumnStream::Column c = stream.next();
    auto [l_t, s_t] = online_push(state, c.d);
    truth.push_back(c.l_true);
    recovered.push_back(l_t);
  }

  double avg_norm = 0.0;
  for (const Vector& l : truth) avg_norm += l.norm();
  avg_norm /= static_cast<double>(truth.size());

  std::vector<OnlineTrackRow> rows;
  for (std::size_t k = 0; k < recovered.size(); ++k) {
    Index t = init_cols + static_cast<Index>(k) + 1;
    double err = (recovered[k] - truth[static_cast<std::size_t>(t - 1)]).norm() / avg_norm;
    rows.push_back(OnlineTrackRow{t, err});
  }
  return rows;
}

// ---------------------------------------------------------------------
// Background subtraction on frame sequences.
// ---------------------------------------------------------------------

struct FrameSequence {
  Index height = 0, width = 0;
  Matrix columns;  // one flattened frame per column, values in [0, 255]

  static FrameSequence from_frames(const std::vector<Matrix>& frames) {
    require(!frames.empty(), "FrameSequence: no frames");
    FrameSequence seq;
    seq.height = frames.front().rows();
    seq.width = frames.front().cols();
    seq.columns.resize(seq.height * seq.width, static_cast<Index>(frames.size()));
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const Matrix& f = frames[k];
      require(f.rows() == seq.height && f.cols() == seq.width,
              "FrameSequence: frames differ in shape");
      require(f.minCoeff() >= 0.0 && f.maxCoeff() <= 255.0,
              "FrameSequence: pixel values outside [0,255]");
      seq.columns.col(static_cast<Index>(k)) =
          Eigen::Map<const Vector>(f.data(), f.size());
    }
    return seq;
  }

  Matrix frame(Index k) const {
    return Eigen::Map<const Matrix>(columns.col(k).data(), height, width);
  }
};

struct BgsubConfig {
  Index m2 = 500;  // sampled pixels per frame for the representation fit
  InformativeConfig informative;  // fallback when no background is given
  L1Config l1;
  double rank_tol = kDefaultRankTol;
};

struct BgsubResult {
  Index height = 0, width = 0;
  Matrix lowrank;  // same layout as FrameSequence::columns, un-clamped
  Matrix sparse;
};

// With background frames, the column space is read off the background
// directly and each frame reduces to one sampled-row vector decomposition;
// without them, the informative pipeline decomposes the frame matrix.
inline BgsubResult run_bgsub(const FrameSequence& frames, const FrameSequence* background,
                             const BgsubConfig& cfg, Rng rng) {
  BgsubResult out;
  out.height = frames.height;
  out.width = frames.width;
  if (background) {
    require(background->height == frames.height && background->width == frames.width,
            "run_bgsub: background frame shape mismatch");
    require(cfg.m2 >= 1 && cfg.m2 <= frames.columns.rows(), "run_bgsub: m2 out of range");
    SubspaceBasis basis = orthonormal_range(background->columns, cfg.rank_tol);
    IndexSet pixels = uniform_indices(frames.columns.rows(), cfg.m2, rng.derive(1));
    Matrix u_rows = select_rows(basis.matrix(), pixels);
    if (numerical_rank(u_rows, 1e-10) < basis.dim())
      throw solver_error("row sketch lost rank; increase m2");
    Matrix q = l1_fit(u_rows, select_rows(frames.columns, pixels), cfg.l1);
    out.lowrank = basis.matrix() * q;
    out.sparse = frames.columns - out.lowrank;
  } else {
    InformativeConfig icfg = cfg.informative;
    require(icfg.r_hat >= 1, "run_bgsub: informative fallback needs r_hat");
    PipelineResult res = decompose_informative(frames.columns, icfg, rng.derive(2));
    out.lowrank = res.L_hat;
    out.sparse = res.S_hat;
  }
  return out;
}

}  // namespace skd

#endif  // SKD_EXPERIMENTS_HPP
