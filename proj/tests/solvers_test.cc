#include <gtest/gtest.h>

#include "skd/datagen.hpp"
#include "skd/solvers.hpp"
#include "test_support.hpp"

using namespace skd;
using skd::test::random_matrix;
using skd::test::rel_err;

namespace {

// Independent reference for min |b - A x|_1: enumerate every set of
// cols(A) rows, interpolate, and keep the best objective. The optimum of
// the piecewise-linear objective sits at such a vertex.
Vector l1_vertex_oracle(const Matrix& a, const Vector& b) {
  Index m = a.rows(), r = a.cols();
  std::vector<Index> comb(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) comb[static_cast<std::size_t>(i)] = i;
  Vector best;
  double best_obj = std::numeric_limits<double>::max();
  while (true) {
    Matrix az(r, r);
    Vector bz(r);
    for (Index k = 0; k < r; ++k) {
      az.row(k) = a.row(comb[static_cast<std::size_t>(k)]);
      bz[k] = b[comb[static_cast<std::size_t>(k)]];
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(az);
    if (qr.rank() == r) {
      Vector x = qr.solve(bz);
      double obj = (b - a * x).lpNorm<1>();
      if (obj < best_obj) {
        best_obj = obj;
        best = x;
      }
    }
    // next combination
    Index i = r - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == m - r + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < r; ++j)
      comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

// ---------------- thresholding identities ----------------

TEST(Thresholding, SoftThresholdAtZeroIsIdentity) {
  Matrix a = random_matrix(6, 7, 31);
  EXPECT_EQ(soft_threshold(a, 0.0), a);
}

TEST(Thresholding, SvThresholdAtZeroReproducesMatrix) {
  Matrix a = random_matrix(9, 6, 32);
  EXPECT_LE((sv_threshold(a, 0.0) - a).norm(), 1e-12 * a.norm());
}

TEST(Thresholding, SoftThresholdShrinksTowardZero) {
  Matrix a(1, 3);
  a << -2.0, 0.3, 5.0;
  Matrix s = soft_threshold(a, 1.0);
  EXPECT_DOUBLE_EQ(s(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(s(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(s(0, 2), 4.0);
}

// ---------------- principal component pursuit ----------------

// Needs a size where the all-low-rank split actually is the optimum: at
// 20x20 with Gaussian factors |UV^T|_inf exceeds 1/sqrt(N1) and the
// program provably prefers a nonzero sparse part.
TEST(PcpAlm, PureLowRankAbsorbsEverything) {
  Rng rng(41);
  Matrix d = gen_gaussian_lr(60, 60, 2, rng);
  SolverConfig cfg;
  cfg.lambda = 1.0 / std::sqrt(60.0);
  Decomposition dec = pcp_alm(d, cfg);
  EXPECT_TRUE(dec.converged);
  EXPECT_LE((d - dec.L_hat).norm(), 1e-6 * d.norm());
  EXPECT_LE(dec.S_hat.norm(), 1e-6 * d.norm());
}

TEST(PcpAlm, RecoversGroundTruthAtModerateSize) {
  ProblemInstance inst = make_gaussian_instance(200, 200, 5, 0.02, 1.0, 1234);
  SolverConfig cfg;
  cfg.lambda = 1.0 / std::sqrt(200.0);
  Decomposition dec = pcp_alm(inst.D, cfg);
  EXPECT_TRUE(dec.converged);
  EXPECT_LE(rel_err(inst.L, dec.L_hat), 5e-3);
}

TEST(PcpAlm, SingleSpikeGoesToSparse) {
  Matrix d = Matrix::Zero(10, 10);
  d(3, 6) = 5.0;
  Decomposition dec = pcp_alm(d);  // lambda = 1/sqrt(10) < 1
  EXPECT_TRUE(dec.converged);
  EXPECT_LE(dec.L_hat.norm(), 1e-6 * d.norm());
  EXPECT_LE((dec.S_hat - d).norm(), 1e-6 * d.norm());
}

TEST(PcpAlm, ResidualReportedTruthfully) {
  ProblemInstance inst = make_gaussian_instance(60, 60, 3, 0.05, 1.0, 77);
  Decomposition dec = pcp_alm(inst.D);
  double recomputed = (inst.D - dec.L_hat - dec.S_hat).norm() / inst.D.norm();
  EXPECT_NEAR(dec.primal_residual, recomputed, 1e-14);
  EXPECT_TRUE(dec.converged);
  EXPECT_LE(dec.primal_residual, 1e-7);
}

TEST(PcpAlm, ObjectiveBeatsRandomFeasiblePerturbations) {
  ProblemInstance inst = make_gaussian_instance(40, 40, 2, 0.05, 1.0, 99);
  SolverConfig cfg;
  Decomposition dec = pcp_alm(inst.D, cfg);
  double lambda = 1.0 / std::sqrt(40.0);
  auto objective = [&](const Matrix& l, const Matrix& s) {
    Eigen::BDCSVD<Matrix> svd(l);
    return lambda * s.lpNorm<1>() + svd.singularValues().sum();
  };
  double base = objective(dec.L_hat, dec.S_hat);
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    Matrix delta = 1e-3 * gaussian_matrix(40, 40, rng);
    double perturbed = objective(dec.L_hat + delta, dec.S_hat - delta);
    EXPECT_LE(base, perturbed + 1e-4 * base);
  }
}

TEST(PcpAlm, ZeroMatrixRejected) {
  EXPECT_THROW(pcp_alm(Matrix::Zero(5, 5)), precondition_error);
}

TEST(PcpAlm, NonConvergenceReportedNotThrown) {
  ProblemInstance inst = make_gaussian_instance(50, 50, 3, 0.05, 1.0, 11);
  SolverConfig cfg;
  cfg.max_iter = 2;
  Decomposition dec = pcp_alm(inst.D, cfg);
  EXPECT_FALSE(dec.converged);
  EXPECT_GT(dec.primal_residual, cfg.tol);
}

// ---------------- stable variant ----------------

TEST(StablePcp, ZeroBudgetMatchesExactProgram) {
  ProblemInstance inst = make_gaussian_instance(60, 60, 3, 0.03, 1.0, 21);
  Decomposition exact = pcp_alm(inst.D);
  Decomposition stable = stable_pcp(inst.D, SolverConfig{}, 0.0);
  EXPECT_LE(rel_err(exact.L_hat, stable.L_hat), 1e-6);
  EXPECT_LE((exact.S_hat - stable.S_hat).norm(), 1e-6 * inst.D.norm());
}

TEST(StablePcp, NoisyRecoveryWithinNoiseProportionalBound) {
  Index n = 100;
  ProblemInstance inst = make_gaussian_instance(n, n, 5, 0.02, 1.0, 31);
  Rng rng(32);
  double sigma = 1e-3;
  Matrix noise = sigma * gaussian_matrix(n, n, rng);
  Matrix d = inst.D + noise;
  Decomposition dec = stable_pcp(d, SolverConfig{}, noise.norm());
  EXPECT_LE((d - dec.L_hat - dec.S_hat).norm(), noise.norm() + 1e-7 * d.norm() + 1e-12);
  double bound = 10.0 * sigma * n / inst.L.norm();
  EXPECT_LE(rel_err(inst.L, dec.L_hat), bound);
}

TEST(StablePcp, PureNoiseKeepsZeroComponents) {
  Rng rng(33);
  Matrix d = gaussian_matrix(30, 30, rng);
  Decomposition dec = stable_pcp(d, SolverConfig{}, d.norm());
  EXPECT_EQ(dec.L_hat.norm(), 0.0);
  EXPECT_EQ(dec.S_hat.norm(), 0.0);
  EXPECT_TRUE(dec.converged);
}

// ---------------- l1 regression ----------------

TEST(L1Fit, ExactDataIsReproduced) {
  Matrix a = random_matrix(12, 4, 51);
  Matrix x0 = random_matrix(4, 3, 52);
  Matrix x = l1_fit(a, a * x0);
  EXPECT_LE((x - x0).norm(), 1e-8 * x0.norm());
}

TEST(L1Fit, IdentityDesignReturnsTargets) {
  Matrix b = random_matrix(6, 4, 53);
  Matrix x = l1_fit(Matrix::Identity(6, 6), b);
  EXPECT_LE((x - b).norm(), 1e-10 * b.norm());
}

TEST(L1Fit, SingleCorruptionRecoveredExactly) {
  Rng rng(54);
  Matrix a = random_orthonormal(10, 2, rng);
  Vector q(2);
  q << 1.3, -0.4;
  for (Index spot = 0; spot < 10; ++spot) {
    Vector b = a * q;
    b[spot] += 3.0;
    Vector x = l1_fit(a, b).col(0);
    Vector ref = l1_vertex_oracle(a, b);
    EXPECT_LE((ref - q).norm(), 1e-9) << "corruption at " << spot;
    EXPECT_LE((x - ref).norm(), 1e-7) << "corruption at " << spot;
  }
}

TEST(L1Fit, RankDeficientDesignRejected) {
  Matrix a(5, 2);
  a.col(0) = Vector::Ones(5);
  a.col(1) = 2.0 * Vector::Ones(5);
  EXPECT_THROW(l1_fit(a, Matrix::Ones(5, 1)), precondition_error);
  Matrix wide = random_matrix(3, 5, 55);
  EXPECT_THROW(l1_fit(wide, Matrix::Ones(3, 1)), precondition_error);
}

TEST(L1Fit, LocalPerturbationsNeverImprove) {
  Rng rng(56);
  Matrix a = random_matrix(15, 3, 57);
  Matrix b = a * random_matrix(3, 2, 58) + gen_bernoulli_sparse(15, 2, 0.15, 2.0, rng);
  Matrix x = l1_fit(a, b);
  for (Index j = 0; j < b.cols(); ++j) {
    double obj = (b.col(j) - a * x.col(j)).lpNorm<1>();
    for (int k = 0; k < 100; ++k) {
      Vector delta(3);
      for (Index i = 0; i < 3; ++i) delta[i] = 1e-4 * rng.gaussian();
      double perturbed = (b.col(j) - a * (x.col(j) + delta)).lpNorm<1>();
      EXPECT_GE(perturbed, obj - 1e-12);
    }
  }
}

TEST(L1Fit, CertificatePassesOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(900 + seed);
    Matrix a = gaussian_matrix(30, 4, rng);
    Vector x0(4);
    for (Index i = 0; i < 4; ++i) x0[i] = rng.gaussian();
    Vector b = a * x0;
    for (Index i = 0; i < 30; ++i)
      if (rng.bernoulli(0.1)) b[i] += 4.0 * rng.rademacher();
    Vector x = l1_fit(a, b).col(0);
    EXPECT_LE(l1_certificate(a, b, x), 1e-6) << "seed " << seed;
  }
}

TEST(L1Fit, ParallelMatchesSequential) {
  Matrix a = random_matrix(25, 4, 61);
  Matrix b = random_matrix(25, 9, 62);
  L1Config seq;
  L1Config par;
  par.threads = 4;
  EXPECT_EQ(l1_fit(a, b, seq), l1_fit(a, b, par));
}

// ---------------- noise-budgeted l1 ----------------

TEST(L1FitNoisy, ZeroBudgetReducesToPlainFit) {
  Matrix a = random_matrix(14, 3, 63);
  Matrix b = random_matrix(14, 2, 64);
  auto [x, e] = l1_fit_noisy(a, b, 0.0);
  EXPECT_EQ(e.norm(), 0.0);
  EXPECT_EQ(x, l1_fit(a, b));
}

TEST(L1FitNoisy, StableUnderSmallNoise) {
  Rng rng(65);
  Matrix a = gaussian_matrix(40, 4, rng);
  Matrix x0 = gaussian_matrix(4, 3, rng);
  Matrix noise = 1e-3 * gaussian_matrix(40, 3, rng);
  Matrix b = a * x0 + noise;
  auto [x, e] = l1_fit_noisy(a, b, noise.norm());
  EXPECT_LE(e.norm(), noise.norm() + 1e-12);
  Eigen::BDCSVD<Matrix> svd(a);
  double smin = svd.singularValues().minCoeff();
  EXPECT_LE((x - x0).norm(), 10.0 * noise.norm() / smin);
}

TEST(L1FitNoisy, HugeBudgetKeepsZeroObjectiveSolution) {
  Matrix a = random_matrix(12, 3, 66);
  Matrix x0 = random_matrix(3, 2, 67);
  Matrix b = a * x0;
  auto [x, e] = l1_fit_noisy(a, b, 1e6);
  EXPECT_LE((b - a * x - e).lpNorm<1>(), 1e-9);
  EXPECT_LE((x - x0).norm(), 1e-6 * x0.norm());
}

// ---------------- null-space oracle ----------------

TEST(BpResidualOracle, InRangeTargetGivesZero) {
  Rng rng(71);
  SubspaceBasis u(random_orthonormal(12, 3, rng));
  Vector q(3);
  q << 0.3, -2.0, 1.1;
  Vector z = bp_residual_oracle(u, u.matrix() * q);
  EXPECT_LE(z.norm(), 1e-9);
}

TEST(BpResidualOracle, RecoversPlantedSparseVector) {
  Rng rng(72);
  SubspaceBasis u(random_orthonormal(40, 4, rng));
  Vector q(4);
  for (Index i = 0; i < 4; ++i) q[i] = rng.gaussian();
  Vector s = Vector::Zero(40);
  s[7] = 2.5;
  s[23] = -1.0;
  Vector d = u.matrix() * q + s;
  Vector z = bp_residual_oracle(u, d);
  EXPECT_LE((z - s).norm(), 1e-7);
}

TEST(BpResidualOracle, AgreesWithL1FitRoute) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(800 + seed);
    SubspaceBasis u(random_orthonormal(30, 3, rng));
    Vector q(3);
    for (Index i = 0; i < 3; ++i) q[i] = rng.gaussian();
    Vector s = Vector::Zero(30);
    s[static_cast<Index>(rng.below(30))] = 3.0 * rng.rademacher();
    Vector d = u.matrix() * q + s;
    Vector z = bp_residual_oracle(u, d);
    Vector q_fit = l1_fit(u.matrix(), d).col(0);
    Vector z_fit = d - u.matrix() * q_fit;
    EXPECT_LE(std::abs(z.lpNorm<1>() - z_fit.lpNorm<1>()),
              1e-6 * std::max(1.0, z_fit.lpNorm<1>()))
        << "seed " << seed;
    EXPECT_LE((z - z_fit).norm(), 1e-6 * std::max(1.0, z_fit.norm())) << "seed " << seed;
  }
}

TEST(BpResidualOracle, RejectsSquareBasis) {
  Rng rng(73);
  SubspaceBasis u(random_orthonormal(5, 5, rng));
  EXPECT_THROW(bp_residual_oracle(u, Vector::Ones(5)), precondition_error);
}

}  // namespace
