#include <gtest/gtest.h>

#include "skd/coherence.hpp"
#include "skd/datagen.hpp"
#include "skd/sampling.hpp"
#include "test_support.hpp"

using namespace skd;

namespace {

double largest_principal_angle(const Matrix& u1, const Matrix& u2) {
  Eigen::BDCSVD<Matrix> svd(u1.transpose() * u2);
  double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(c);
}

TEST(GenGaussianLr, RankOneColumnsAreParallel) {
  Matrix l = gen_gaussian_lr(20, 15, 1, Rng(121));
  for (Index j = 1; j < l.cols(); ++j) {
    double cosine = std::abs(l.col(0).dot(l.col(j))) / (l.col(0).norm() * l.col(j).norm());
    EXPECT_NEAR(cosine, 1.0, 1e-12);
  }
}

TEST(GenGaussianLr, CleanSpectralGapAtRank) {
  Matrix l = gen_gaussian_lr(100, 100, 5, Rng(122));
  Eigen::BDCSVD<Matrix> svd(l);
  Vector sv = svd.singularValues();
  EXPECT_GT(sv[4], 1e3 * sv[5]);
}

TEST(GenGaussianLr, FullRankWhenRequested) {
  Matrix l = gen_gaussian_lr(12, 30, 12, Rng(123));
  EXPECT_EQ(numerical_rank(l), 12);
}

TEST(GenBernoulliSparse, DensityZeroAndOne) {
  EXPECT_EQ(gen_bernoulli_sparse(8, 9, 0.0, 1.0, Rng(124)).norm(), 0.0);
  Matrix all = gen_bernoulli_sparse(8, 9, 1.0, 2.5, Rng(125));
  EXPECT_EQ(all.cwiseAbs().minCoeff(), 2.5);
  EXPECT_EQ(all.cwiseAbs().maxCoeff(), 2.5);
}

TEST(GenBernoulliSparse, CountWithinBinomialBand) {
  Matrix s = gen_bernoulli_sparse(400, 400, 0.02, 1.0, Rng(126));
  Index nonzeros = 0;
  for (Index j = 0; j < s.cols(); ++j)
    for (Index i = 0; i < s.rows(); ++i)
      if (s(i, j) != 0.0) ++nonzeros;
  double mean = 400.0 * 400.0 * 0.02;
  double band = 3.0 * std::sqrt(mean * 0.98);
  EXPECT_NEAR(static_cast<double>(nonzeros), mean, band);
}

TEST(GenClustered, SingleClusterMatchesPlainLowRank) {
  Matrix l = gen_clustered(40, 4, 1, {25}, {1.0}, Rng(127));
  EXPECT_EQ(l.rows(), 40);
  EXPECT_EQ(l.cols(), 25);
  EXPECT_EQ(numerical_rank(l), 4);
}

TEST(GenClustered, ClusterCountMustDivideRank) {
  EXPECT_THROW(gen_clustered(20, 5, 2, {10, 10}, {1.0, 1.0}, Rng(128)), precondition_error);
}

// Imbalanced clusters starve uniform sampling: 3r random columns rarely
// span the full rank because the narrow clusters are almost never hit.
TEST(GenClustered, UniformSamplingMissesNarrowClusters) {
  Index r = 12;
  int n = 6;
  std::vector<Index> sizes = {400, 400, 400, 10, 10, 10};  // 200*r/n and 5*r/n
  std::vector<double> scales(6, 1.0);
  int deficient = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(1300 + static_cast<std::uint64_t>(trial));
    Matrix l = gen_clustered(200, r, n, sizes, scales, rng.derive(0));
    IndexSet cols = uniform_indices(l.cols(), 3 * r, rng.derive(1));
    if (numerical_rank(select_columns(l, cols)) < r) ++deficient;
  }
  EXPECT_GE(deficient, 8);
}

TEST(GenClustered, LoudScaleShowsUpInBlockNorms) {
  std::vector<Index> sizes = {30, 30, 10, 10};
  std::vector<double> scales = {1.0, 1.0, 13.0, 13.0};
  Matrix l = gen_clustered(80, 8, 4, sizes, scales, Rng(129));
  double quiet = l.middleCols(0, 30).norm() / std::sqrt(30.0);
  double loud = l.middleCols(60, 10).norm() / std::sqrt(10.0);
  EXPECT_GT(loud / quiet, 6.0);  // 13x scale, up to random variation
}

TEST(ImbalancedBlockSizes, SumAndMinimumRespected) {
  std::vector<Index> sizes = imbalanced_block_sizes(500, 20, 10);
  Index total = 0;
  for (Index s : sizes) {
    EXPECT_GE(s, 2);
    total += s;
  }
  EXPECT_EQ(total, 500);
  EXPECT_GT(sizes.front(), 20 * sizes.back());  // strong imbalance preserved
}

TEST(GenDoublyClustered, RankExactlyR) {
  Matrix l = gen_doubly_clustered(200, 8, 4, Rng(130));
  Eigen::BDCSVD<Matrix> svd(l);
  Vector sv = svd.singularValues();
  EXPECT_NEAR(sv[0], 1.0, 1e-10);  // orthonormal times orthonormal transpose
  EXPECT_NEAR(sv[7], 1.0, 1e-10);
  EXPECT_EQ(numerical_rank(l), 8);
}

TEST(GenDoublyClustered, BothSidesMoreCoherentThanGaussian) {
  Index n = 500, r = 20;
  Matrix doubly = gen_doubly_clustered(n, r, 10, Rng(131));
  Matrix gauss = gen_gaussian_lr(n, n, r, Rng(132));
  CoherenceReport cd = coherence_of(doubly);
  CoherenceReport cg = coherence_of(gauss);
  EXPECT_GE(cd.gamma_u, 2.0 * cg.gamma_u);
  EXPECT_GE(cd.gamma_v, 2.0 * cg.gamma_v);
  std::cout << "[ note     ] near-sparse fraction of doubly clustered draw: "
            << near_sparse_fraction(doubly) << "\n";
}

TEST(GenDoublyClustered, SingleClusterStaysIncoherent) {
  Index n = 200, r = 4;
  Matrix mild = gen_doubly_clustered(n, r, 1, Rng(133));
  Matrix gauss = gen_gaussian_lr(n, n, r, Rng(134));
  CoherenceReport cm = coherence_of(mild);
  CoherenceReport cg = coherence_of(gauss);
  EXPECT_LE(cm.gamma_u, 2.0 * cg.gamma_u);
  EXPECT_LE(cm.gamma_v, 2.0 * cg.gamma_v);
}

TEST(ProblemInstance, AssemblyIdentityIsExact) {
  ProblemInstance inst = make_gaussian_instance(50, 60, 3, 0.05, 1.0, 135);
  EXPECT_EQ((inst.D - inst.L - inst.S).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(numerical_rank(inst.L), 3);
  EXPECT_TRUE(inst.D.allFinite());
  ProblemInstance again = make_gaussian_instance(50, 60, 3, 0.05, 1.0, 135);
  EXPECT_EQ(inst.D, again.D);
}

TEST(ProblemInstance, SparseSupportSurvivesRefolding) {
  ProblemInstance inst = make_gaussian_instance(80, 80, 4, 0.03, 1.0, 136);
  Index support = 0;
  for (Index j = 0; j < 80; ++j)
    for (Index i = 0; i < 80; ++i)
      if (inst.S(i, j) != 0.0) {
        ++support;
        EXPECT_NEAR(std::abs(inst.S(i, j)), 1.0, 1e-9);
      }
  double mean = 80.0 * 80.0 * 0.03;
  EXPECT_NEAR(static_cast<double>(support), mean, 3.0 * std::sqrt(mean));
}

// ------------- column stream -------------

TEST(ColumnStream, StaticSubspaceWhenAlphaZero) {
  StreamSpec spec{60, 3, 0.0, 5, 40, 0.0, 1.0};
  ColumnStream stream(spec, Rng(137));
  Matrix u0 = stream.basis();
  while (!stream.done()) stream.next();
  EXPECT_EQ(stream.basis(), u0);
}

TEST(ColumnStream, NoSparsePartMeansColumnsLieInSpan) {
  StreamSpec spec{50, 4, 0.01, 5, 30, 0.0, 1.0};
  ColumnStream stream(spec, Rng(138));
  while (!stream.done()) {
    Matrix u = stream.basis();
    ColumnStream::Column c = stream.next();
    EXPECT_EQ(c.d, c.l_true);
    Vector residual = c.d - u * (u.transpose() * c.d);
    EXPECT_LE(residual.norm(), 1e-10 * c.d.norm());
  }
}

TEST(ColumnStream, AggressiveRotationDecorrelatesBasis) {
  StreamSpec spec{80, 3, 5.0, 1, 30, 0.0, 1.0};
  ColumnStream stream(spec, Rng(139));
  double total_angle = 0.0;
  int rotations = 0;
  Matrix prev = stream.basis();
  while (!stream.done()) {
    stream.next();
    total_angle += largest_principal_angle(prev, stream.basis());
    prev = stream.basis();
    ++rotations;
  }
  EXPECT_GT(total_angle / rotations, 0.5);
}

TEST(ColumnStream, TruthOracleTracksEmissionTimeBasis) {
  StreamSpec spec{40, 2, 0.3, 4, 20, 0.2, 1.0};
  ColumnStream stream(spec, Rng(140));
  while (!stream.done()) {
    Matrix u = stream.basis();
    ColumnStream::Column c = stream.next();
    Vector residual = c.l_true - u * (u.transpose() * c.l_true);
    EXPECT_LE(residual.norm(), 1e-10 * std::max(1.0, c.l_true.norm()));
    Vector sparse = c.d - c.l_true;
    for (Index i = 0; i < sparse.size(); ++i)
      if (sparse[i] != 0.0) EXPECT_NEAR(std::abs(sparse[i]), 1.0, 1e-12);
  }
}

TEST(ColumnStream, MaterializeIsDeterministic) {
  StreamSpec spec{30, 2, 0.1, 5, 25, 0.05, 1.0};
  auto [d1, l1] = ColumnStream::materialize(spec, Rng(141));
  auto [d2, l2] = ColumnStream::materialize(spec, Rng(141));
  EXPECT_EQ(d1, d2);
  EXPECT_EQ(l1, l2);
  EXPECT_TRUE(d1.allFinite());
}

}  // namespace
