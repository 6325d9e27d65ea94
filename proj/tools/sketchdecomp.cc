// Command-line front end: generators, decompositions, samplers, coherence
// diagnostics and the experiment harness, all emitting CSV (or PGM for
// frames) so runs can be plotted elsewhere.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skd/sketchdecomp.hpp"

namespace {

using nlohmann::json;
using namespace skd;

std::string command_line(int argc, char** argv) {
  std::ostringstream os;
  for (int i = 0; i < argc; ++i) {
    if (i) os << ' ';
    os << argv[i];
  }
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "cannot open for writing: " + path);
  os.precision(17);
  return os;
}

void write_sidecar(const std::string& out, const ProblemInstance& inst) {
  std::ofstream os(out + ".meta.jsonl");
  require(os.good(), "cannot open for writing: " + out + ".meta.jsonl");
  json line = {{"r_true", inst.r_true},
               {"rho", inst.rho},
               {"seed", inst.seed},
               {"structure", to_string(inst.structure)},
               {"clusters", inst.clusters},
               {"rows", inst.D.rows()},
               {"cols", inst.D.cols()}};
  os << line.dump() << '\n';
}

void write_stream_sidecar(const std::string& out, const StreamSpec& spec, std::uint64_t seed) {
  std::ofstream os(out + ".meta.jsonl");
  require(os.good(), "cannot open for writing: " + out + ".meta.jsonl");
  json line = {{"r_true", spec.r},      {"rho", spec.rho},   {"seed", seed},
               {"structure", "stream"}, {"alpha", spec.alpha}, {"period", spec.n},
               {"rows", spec.n1},       {"cols", spec.n2}};
  os << line.dump() << '\n';
}

struct GenArgs {
  std::string model = "gaussian";
  std::string out;
  std::string out_l, out_s;
  Index n1 = 400, n2 = 400, r = 5;
  int clusters = 10;
  double rho = 0.02, amplitude = 1.0;
  double loud_scale = 13.0, big_weight = 130.0, small_weight = 10.0;
  double alpha = 0.0;
  int period = 10;
};

int run_gen(const GenArgs& a, std::uint64_t seed) {
  if (a.model == "stream") {
    StreamSpec spec{a.n1, a.r, a.alpha, a.period, a.n2, a.rho, a.amplitude};
    auto [d, l] = ColumnStream::materialize(spec, Rng(seed));
    write_matrix(a.out, d);
    if (!a.out_l.empty()) write_matrix(a.out_l, l);
    write_stream_sidecar(a.out, spec, seed);
    return 0;
  }
  ProblemInstance inst;
  if (a.model == "gaussian") {
    inst = make_gaussian_instance(a.n1, a.n2, a.r, a.rho, a.amplitude, seed);
  } else if (a.model == "clustered") {
    inst = make_clustered_instance(a.n1, a.n2, a.r, a.clusters, a.loud_scale, a.big_weight,
                                   a.small_weight, a.rho, a.amplitude, seed);
  } else if (a.model == "doubly") {
    inst = make_doubly_clustered_instance(a.n1, a.r, a.clusters, a.rho, a.amplitude, seed);
  } else {
    throw precondition_error("gen: unknown model " + a.model);
  }
  write_matrix(a.out, inst.D);
  if (!a.out_l.empty()) write_matrix(a.out_l, inst.L);
  if (!a.out_s.empty()) write_matrix(a.out_s, inst.S);
  write_sidecar(a.out, inst);
  return 0;
}

struct DecomposeArgs {
  std::string mode = "full";
  std::string input, out_l, out_s;
  Index m1 = 0, m2 = 0;
  double lambda = 0.0;
  Index r_hat = 0;
  int c_r = 3, c = 3;
  bool use_alg3 = false, refine = false;
};

int run_decompose(const DecomposeArgs& a, std::uint64_t seed, int threads,
                  const std::string& cmd) {
  Matrix d = read_matrix(a.input);
  Matrix l_hat, s_hat;
  bool converged = true;
  int iterations = 0;
  double residual = 0.0, seconds = 0.0;

  if (a.mode == "full") {
    auto t0 = std::chrono::steady_clock::now();
    SolverConfig cfg;
    cfg.lambda = a.lambda;
    Decomposition dec = pcp_alm(d, cfg);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    l_hat = dec.L_hat;
    s_hat = dec.S_hat;
    converged = dec.converged;
    iterations = dec.iterations;
    residual = dec.primal_residual;
  } else if (a.mode == "uniform") {
    require(a.m1 >= 1 && a.m2 >= 1, "decompose: uniform mode needs --m1 and --m2");
    PipelineConfig cfg;
    cfg.pcp.lambda = a.lambda;
    cfg.l1.threads = threads;
    PipelineResult res = decompose_uniform(d, a.m1, a.m2, cfg, Rng(seed));
    l_hat = res.L_hat;
    s_hat = res.S_hat;
    converged = res.diagnostics.pcp_converged;
    iterations = res.diagnostics.pcp_iterations;
    residual = res.diagnostics.pcp_residual;
    seconds = res.diagnostics.seconds;
  } else if (a.mode == "informative") {
    require(a.r_hat >= 1, "decompose: informative mode needs --rhat");
    InformativeConfig cfg;
    cfg.r_hat = a.r_hat;
    cfg.C_r = a.c_r;
    cfg.C = a.c;
    cfg.use_alg3 = a.use_alg3;
    cfg.refine_row_basis = a.refine;
    cfg.pcp.lambda = a.lambda;
    cfg.l1.threads = threads;
    PipelineResult res = decompose_informative(d, cfg, Rng(seed));
    l_hat = res.L_hat;
    s_hat = res.S_hat;
    converged = res.diagnostics.pcp_converged;
    iterations = res.diagnostics.pcp_iterations;
    residual = res.diagnostics.pcp_residual;
    seconds = res.diagnostics.seconds;
  } else {
    throw precondition_error("decompose: unknown mode " + a.mode);
  }

  if (!a.out_l.empty()) write_matrix(a.out_l, l_hat);
  if (!a.out_s.empty()) write_matrix(a.out_s, s_hat);
  std::cout << "# " << cmd << "\n";
  std::cout << "iterations,residual,converged,seconds\n";
  std::cout << iterations << ',' << residual << ',' << (converged ? 1 : 0) << ',' << seconds
            << "\n";
  return converged ? 0 : 3;
}

struct SampleArgs {
  std::string alg = "uniform";
  std::string input, out, out_rows;
  std::string dim = "cols";
  Index m = 0;
  int c = 1;
  double tau = 0.0;
  Index r_hat = 0;
  int c_r = 3, T = 2, max_cycles = 10;
};

int run_sample(const SampleArgs& a, std::uint64_t seed) {
  Matrix d = read_matrix(a.input);
  Rng rng(seed);
  if (a.alg == "uniform") {
    Index n = a.dim == "rows" ? d.rows() : d.cols();
    write_index_csv(a.out, uniform_indices(n, a.m, rng));
    return 0;
  }
  if (a.alg == "informative") {
    Alg2Config cfg;
    cfg.repeats = a.c;
    if (a.tau > 0.0) cfg.tau = a.tau;
    Matrix target = a.dim == "rows" ? Matrix(d.transpose()) : d;
    write_index_csv(a.out, informative_columns(target, cfg, rng));
    return 0;
  }
  if (a.alg == "alternating") {
    require(a.r_hat >= 1, "sample: alternating mode needs --rhat");
    Alg3Config cfg;
    cfg.C_r = a.c_r;
    cfg.r_hat = a.r_hat;
    cfg.T = a.T;
    cfg.max_cycles = a.max_cycles;
    Alg3Result res = alternating_sample(d, cfg, rng);
    write_index_csv(a.out, res.col_idx);
    if (!a.out_rows.empty()) write_index_csv(a.out_rows, res.row_idx);
    return 0;
  }
  throw precondition_error("sample: unknown algorithm " + a.alg);
}

int run_coherence(const std::string& input) {
  CoherenceReport rep = coherence_of(read_matrix(input));
  std::cout.precision(17);
  std::cout << "gamma_u," << rep.gamma_u << "\n";
  std::cout << "gamma_v," << rep.gamma_v << "\n";
  std::cout << "mu," << rep.mu << "\n";
  std::cout << "uv_inf," << rep.uv_inf << "\n";
  std::cout << "rank," << rep.rank << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized low-rank plus sparse decomposition toolkit"};
  app.set_config("--config");

  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "Master seed; every run is reproducible from it");
  app.add_option("--threads", threads, "Worker threads for per-column fits and trial grids");

  // --- gen ---
  GenArgs gen;
  CLI::App* cgen = app.add_subcommand("gen", "Generate synthetic instances");
  cgen->add_option("--model", gen.model, "gaussian|clustered|doubly|stream");
  cgen->add_option("--out", gen.out, "Output matrix file (.csv for text, else binary)")
      ->required();
  cgen->add_option("--out-l", gen.out_l, "Also write the low-rank component");
  cgen->add_option("--out-s", gen.out_s, "Also write the sparse component");
  cgen->add_option("--n1", gen.n1, "Rows");
  cgen->add_option("--n2", gen.n2, "Columns (stream length for stream)");
  cgen->add_option("--r", gen.r, "Rank");
  cgen->add_option("--clusters", gen.clusters, "Cluster count (clustered/doubly)");
  cgen->add_option("--rho", gen.rho, "Sparse density");
  cgen->add_option("--amplitude", gen.amplitude, "Sparse magnitude");
  cgen->add_option("--loud-scale", gen.loud_scale, "Scale on the narrow clusters");
  cgen->add_option("--big-weight", gen.big_weight, "Column weight of wide clusters");
  cgen->add_option("--small-weight", gen.small_weight, "Column weight of narrow clusters");
  cgen->add_option("--alpha", gen.alpha, "Stream rotation strength");
  cgen->add_option("--period", gen.period, "Stream rotation period");

  // --- decompose ---
  DecomposeArgs dec;
  CLI::App* cdec = app.add_subcommand("decompose", "Decompose a matrix file");
  cdec->add_option("--mode", dec.mode, "full|uniform|informative");
  cdec->add_option("input", dec.input, "Matrix file")->required();
  cdec->add_option("--out-l", dec.out_l, "Low-rank output file");
  cdec->add_option("--out-s", dec.out_s, "Sparse output file");
  cdec->add_option("--m1", dec.m1, "Sampled columns (uniform mode)");
  cdec->add_option("--m2", dec.m2, "Sampled rows (uniform mode)");
  cdec->add_option("--lambda", dec.lambda, "Sparsity weight; 0 = 1/sqrt(rows)");
  cdec->add_option("--rhat", dec.r_hat, "Rank upper bound (informative mode)");
  cdec->add_option("--cr", dec.c_r, "Row sketch multiplier (informative mode)");
  cdec->add_option("--c", dec.c, "Spanning-set repeats (informative mode)");
  cdec->add_flag("--use-alg3", dec.use_alg3, "Bootstrap rows by alternating sampling");
  cdec->add_flag("--refine", dec.refine, "Second pass on the kept sketch columns");

  // --- sample ---
  SampleArgs smp;
  CLI::App* csmp = app.add_subcommand("sample", "Select column/row indices");
  csmp->add_option("--alg", smp.alg, "uniform|informative|alternating");
  csmp->add_option("input", smp.input, "Matrix file")->required();
  csmp->add_option("--out", smp.out, "Index CSV (one index per line)")->required();
  csmp->add_option("--out-rows", smp.out_rows, "Row index CSV (alternating only)");
  csmp->add_option("--dim", smp.dim, "cols|rows: which dimension to sample");
  csmp->add_option("--m", smp.m, "Sample size (uniform)");
  csmp->add_option("--c", smp.c, "Spanning-set repeats (informative)");
  csmp->add_option("--tau", smp.tau, "Novelty threshold; 0 = 1e-8 * |A|_F");
  csmp->add_option("--rhat", smp.r_hat, "Rank upper bound (alternating)");
  csmp->add_option("--cr", smp.c_r, "Repeats per cycle (alternating)");
  csmp->add_option("--T", smp.T, "Stagnation window (alternating)");
  csmp->add_option("--max-cycles", smp.max_cycles, "Cycle cap (alternating)");

  // --- coherence ---
  std::string coh_input;
  CLI::App* ccoh = app.add_subcommand("coherence", "Coherence diagnostics of a matrix file");
  ccoh->add_option("input", coh_input, "Matrix file")->required();

  // --- phase ---
  PhaseParams phase;
  std::string phase_out;
  CLI::App* cphase = app.add_subcommand("phase", "Phase-transition grid");
  cphase->add_option("--out", phase_out, "Output CSV")->required();
  cphase->add_option("--n1", phase.n1);
  cphase->add_option("--n2", phase.n2);
  cphase->add_option("--r", phase.r);
  cphase->add_option("--rho", phase.rho);
  cphase->add_option("--amplitude", phase.amplitude);
  cphase->add_option("--m1-list", phase.m1_list)->delimiter(',')->required();
  cphase->add_option("--m2-list", phase.m2_list)->delimiter(',')->required();
  cphase->add_option("--trials", phase.trials);
  cphase->add_option("--criterion", phase.criterion);

  // --- compare ---
  CompareParams cmp;
  std::string cmp_out;
  CLI::App* ccmp = app.add_subcommand("compare", "Informative vs uniform sampling");
  ccmp->add_option("--out", cmp_out, "Output CSV")->required();
  ccmp->add_option("--n1", cmp.n1);
  ccmp->add_option("--cols", cmp.total_cols);
  ccmp->add_option("--r", cmp.r);
  ccmp->add_option("--clusters", cmp.clusters);
  ccmp->add_option("--loud-scale", cmp.loud_scale);
  ccmp->add_option("--rho", cmp.rho);
  ccmp->add_option("--amplitude", cmp.amplitude);
  ccmp->add_option("--m-list", cmp.m_list)->delimiter(',')->required();
  ccmp->add_option("--trials", cmp.trials);
  ccmp->add_option("--criterion", cmp.criterion);

  // --- alg3 ---
  Alg3TraceParams a3;
  std::string a3_out;
  CLI::App* ca3 = app.add_subcommand("alg3", "Alternating sampling rank traces");
  ca3->add_option("--out", a3_out, "Output CSV")->required();
  ca3->add_option("--n", a3.n);
  ca3->add_option("--r", a3.r);
  ca3->add_option("--clusters", a3.clusters);
  ca3->add_option("--rho", a3.rho);
  ca3->add_option("--C", a3.C);
  ca3->add_option("--trials", a3.trials);
  ca3->add_option("--max-cycles", a3.max_cycles);
  ca3->add_option("--T", a3.T);

  // --- online ---
  std::string online_in, online_truth, online_out;
  OnlineConfig online_cfg;
  CLI::App* conl = app.add_subcommand("online", "Track a column stream from a matrix file");
  conl->add_option("input", online_in, "Stream file, consumed column-wise")->required();
  conl->add_option("--truth", online_truth, "Expected low-rank columns for error reporting");
  conl->add_option("--out", online_out, "Output CSV")->required();
  conl->add_option("--rhat", online_cfg.r_hat, "Rank upper bound")->required();
  conl->add_option("--nu", online_cfg.n_u, "Basis refresh period (0 = never)");
  conl->add_option("--ns", online_cfg.n_s, "Window multiplier");
  conl->add_option("--cr", online_cfg.C_r, "Init batch multiplier");
  conl->add_option("--crows", online_cfg.C_rows, "Row sampling repeats");

  // --- bgsub ---
  std::vector<std::string> bg_frames, bg_background;
  std::string bg_prefix;
  BgsubConfig bg_cfg;
  CLI::App* cbg = app.add_subcommand("bgsub", "Background subtraction on PGM frames");
  cbg->add_option("--frames", bg_frames, "Input frames (P5 PGM)")->required();
  cbg->add_option("--bg", bg_background, "Known background frames");
  cbg->add_option("--m2", bg_cfg.m2, "Sampled pixels per frame");
  cbg->add_option("--rhat", bg_cfg.informative.r_hat, "Rank bound for the no-background path");
  cbg->add_option("--out-prefix", bg_prefix, "Prefix for low-/sparse- output frames")
      ->required();

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
    std::string cmd = command_line(argc, argv);
    Rng rng(seed);

    if (*cgen) return run_gen(gen, seed);
    if (*cdec) return run_decompose(dec, seed, threads, cmd);
    if (*csmp) return run_sample(smp, seed);
    if (*ccoh) return run_coherence(coh_input);

    if (*cphase) {
      phase.threads = threads;
      phase.pipeline.l1.threads = 1;
      GridResult grid = run_phase_transition(phase, rng);
      auto os = open_out(phase_out);
      os << "# " << cmd << " seed=" << seed << "\n";
      os << "m1,m2,success_rate,trials,criterion\n";
      for (Index i = 0; i < grid.success_rate.rows(); ++i)
        for (Index j = 0; j < grid.success_rate.cols(); ++j)
          os << grid.m1_values[static_cast<std::size_t>(i)] << ','
             << grid.m2_values[static_cast<std::size_t>(j)] << ',' << grid.success_rate(i, j)
             << ',' << grid.trials << ',' << grid.criterion << "\n";
      return 0;
    }

    if (*ccmp) {
      cmp.threads = threads;
      auto rows = run_sampling_comparison(cmp, rng);
      auto os = open_out(cmp_out);
      os << "# " << cmd << " seed=" << seed << "\n";
      os << "m,method,success,avg_error,successes,trials\n";
      for (const CompareRow& row : rows)
        os << row.m << ',' << row.method << ',' << (row.success ? 1 : 0) << ',' << row.avg_error
           << ',' << row.successes << ',' << row.trials << "\n";
      return 0;
    }

    if (*ca3) {
      auto rows = run_alg3_trace(a3, rng);
      auto os = open_out(a3_out);
      os << "# " << cmd << " seed=" << seed << "\n";
      os << "trial,cycle,rank\n";
      for (const Alg3TraceRow& row : rows)
        os << row.trial << ',' << row.cycle << ',' << row.rank << "\n";
      return 0;
    }

    if (*conl) {
      Matrix d = read_matrix(online_in);
      online_cfg.l1.threads = threads;
      Index init_cols = static_cast<Index>(online_cfg.C_r) * online_cfg.r_hat;
      require(d.cols() > init_cols, "online: stream shorter than the init batch");
      Matrix truth;
      if (!online_truth.empty()) {
        truth = read_matrix(online_truth);
        require(truth.rows() == d.rows() && truth.cols() == d.cols(),
                "online: truth shape mismatch");
      }
      OnlineState state = online_init(d.leftCols(init_cols), online_cfg, rng.derive(2));
      double avg_norm = 0.0;
      if (truth.size() > 0) {
        for (Index j = 0; j < truth.cols(); ++j) avg_norm += truth.col(j).norm();
        avg_norm /= static_cast<double>(truth.cols());
      }
      auto os = open_out(online_out);
      os << "# " << cmd << " seed=" << seed << "\n";
      os << (truth.size() > 0 ? "t,normalized_error\n" : "t,sparse_norm\n");
      for (Index t = init_cols; t < d.cols(); ++t) {
        auto [l_t, s_t] = online_push(state, d.col(t));
        double value = truth.size() > 0 ? (l_t - truth.col(t)).norm() / avg_norm : s_t.norm();
        os << (t + 1) << ',' << value << "\n";
      }
      return 0;
    }

    if (*cbg) {
      std::vector<Matrix> frames;
      for (const std::string& f : bg_frames) frames.push_back(read_pgm(f));
      FrameSequence seq = FrameSequence::from_frames(frames);
      FrameSequence bg;
      bool have_bg = !bg_background.empty();
      if (have_bg) {
        std::vector<Matrix> bgf;
        for (const std::string& f : bg_background) bgf.push_back(read_pgm(f));
        bg = FrameSequence::from_frames(bgf);
      }
      bg_cfg.l1.threads = threads;
      BgsubResult res = run_bgsub(seq, have_bg ? &bg : nullptr, bg_cfg, rng);
      for (Index k = 0; k < res.lowrank.cols(); ++k) {
        std::ostringstream low, sp;
        low << bg_prefix << "low-" << k << ".pgm";
        sp << bg_prefix << "sparse-" << k << ".pgm";
        Matrix lowf = Eigen::Map<const Matrix>(res.lowrank.col(k).data(), res.height, res.width);
        Matrix spf = Eigen::Map<const Matrix>(res.sparse.col(k).data(), res.height, res.width);
        write_pgm(low.str(), lowf);
        write_pgm(sp.str(), spf.cwiseAbs());
      }
      return 0;
    }

    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const precondition_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const solver_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
