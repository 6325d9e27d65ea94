#ifndef SKD_DATAGEN_HPP
#define SKD_DATAGEN_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "skd/errors.hpp"
#include "skd/matrix.hpp"
#include "skd/rng.hpp"

namespace skd {

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  return m;
}

// Haar-distributed orthonormal columns (QR of a Gaussian with the sign fix).
inline Matrix random_orthonormal(Index rows, Index cols, Rng& rng) {
  require(cols <= rows, "random_orthonormal: more columns than rows");
  Matrix g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  Matrix r = qr.matrixQR().topRows(cols);
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// Product of two standard normal factors; rank r almost surely.
inline Matrix gen_gaussian_lr(Index n1, Index n2, Index r, Rng rng) {
  require(r >= 1 && r <= std::min(n1, n2), "gen_gaussian_lr: invalid rank");
  Matrix u = gaussian_matrix(n1, r, rng);
  Matrix q = gaussian_matrix(r, n2, rng);
  return u * q;
}

// Each entry independently nonzero with probability rho; nonzero values are
// amplitude times a random sign.
inline Matrix gen_bernoulli_sparse(Index n1, Index n2, double rho, double amplitude, Rng rng) {
  require(rho >= 0.0 && rho <= 1.0, "gen_bernoulli_sparse: rho must be in [0,1]");
  Matrix s = Matrix::Zero(n1, n2);
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i)
      if (rng.bernoulli(rho)) s(i, j) = amplitude * rng.rademacher();
  return s;
}

// Column-wise concatenation of n blocks scale_i * U_i * Q_i, each block
// contributing r/n directions and cols_per_cluster[i] columns.
inline Matrix gen_clustered(Index n1, Index r, int n, const std::vector<Index>& cols_per_cluster,
                            const std::vector<double>& scales, Rng rng) {
  require(n >= 1, "gen_clustered: need at least one cluster");
  require(r % n == 0, "gen_clustered: cluster count must divide the rank");
  require(cols_per_cluster.size() == static_cast<std::size_t>(n) &&
              scales.size() == static_cast<std::size_t>(n),
          "gen_clustered: need one size and one scale per cluster");
  Index block_rank = r / n;
  Index total = 0;
  for (Index c : cols_per_cluster) {
    require(c >= block_rank, "gen_clustered: cluster narrower than its rank");
    total += c;
  }
  Matrix g(n1, total);
  Index at = 0;
  for (int i = 0; i < n; ++i) {
    Index cols = cols_per_cluster[static_cast<std::size_t>(i)];
    Matrix u = gaussian_matrix(n1, block_rank, rng);
    Matrix q = gaussian_matrix(block_rank, cols, rng);
    g.middleCols(at, cols) = scales[static_cast<std::size_t>(i)] * u * q;
    at += cols;
  }
  require(numerical_rank(g, 1e-6) == r, "gen_clustered: degenerate draw, rank below r");
  return g;
}

// Block column counts in the ratio big:small (first half big, as many of
// each as the cluster count allows), each at least r/n, summing to total.
inline std::vector<Index> imbalanced_block_sizes(Index total, Index r, int n,
                                                 double big_weight = 200.0,
                                                 double small_weight = 5.0) {
  require(n >= 1 && r % n == 0, "imbalanced_block_sizes: cluster count must divide the rank");
  require(total >= r, "imbalanced_block_sizes: total below the rank");
  Index block_rank = r / n;
  int n_big = n / 2;
  if (n_big == 0) n_big = n;  // single cluster: everything in one block
  double weight_sum = n_big * big_weight + (n - n_big) * small_weight;
  std::vector<Index> sizes(static_cast<std::size_t>(n));
  Index assigned = 0;
  for (int i = 0; i < n; ++i) {
    double w = i < n_big ? big_weight : small_weight;
    Index sz = std::max<Index>(block_rank, static_cast<Index>(total * w / weight_sum));
    sizes[static_cast<std::size_t>(i)] = sz;
    assigned += sz;
  }
  // Push the rounding leftover into the big blocks, pulling from them if over.
  Index i = 0;
  while (assigned != total) {
    std::size_t k = static_cast<std::size_t>(i % std::max(n_big, 1));
    if (assigned < total) {
      ++sizes[k];
      ++assigned;
    } else if (sizes[k] > block_rank) {
      --sizes[k];
      --assigned;
    }
    ++i;
    require(i < 4 * static_cast<Index>(n) + total, "imbalanced_block_sizes: cannot meet total");
  }
  return sizes;
}

// Low-rank matrix whose column *and* row spaces are both clustered: take the
// top-r right singular vectors of two independent clustered draws and form
// their outer product. All r singular values equal one.
inline Matrix gen_doubly_clustered(Index n, Index r, int n_clusters, Rng rng) {
  std::vector<Index> sizes = imbalanced_block_sizes(n, r, n_clusters);
  std::vector<double> ones(static_cast<std::size_t>(n_clusters), 1.0);
  Rng r1 = rng.derive(1), r2 = rng.derive(2);
  Matrix g1 = gen_clustered(n, r, n_clusters, sizes, ones, r1);
  Matrix g2 = gen_clustered(n, r, n_clusters, sizes, ones, r2);
  Eigen::BDCSVD<Matrix> svd1(g1, Eigen::ComputeThinV);
  Eigen::BDCSVD<Matrix> svd2(g2, Eigen::ComputeThinV);
  Matrix ug = svd1.matrixV().leftCols(r);
  Matrix vg = svd2.matrixV().leftCols(r);
  return ug * vg.transpose();
}

// Share of entries that are not negligibly small; the doubly clustered
// construction tends to be nearly sparse and this records by how much.
inline double near_sparse_fraction(const Matrix& l, double rel_tol = 1e-3) {
  double cutoff = rel_tol * l.cwiseAbs().maxCoeff();
  Index count = 0;
  for (Index j = 0; j < l.cols(); ++j)
    for (Index i = 0; i < l.rows(); ++i)
      if (std::abs(l(i, j)) > cutoff) ++count;
  return static_cast<double>(count) / static_cast<double>(l.size());
}

enum class Structure { gaussian, clustered, doubly_clustered, stream };

inline std::string to_string(Structure s) {
  switch (s) {
    case Structure::gaussian: return "gaussian";
    case Structure::clustered: return "clustered";
    case Structure::doubly_clustered: return "doubly_clustered";
    case Structure::stream: return "stream";
  }
  return "unknown";
}

// Generated (L, S, D) triple with its ground truth. S is refolded as D - L
// after assembly so the decomposition identity holds bit-exactly while the
// support stays untouched.
struct ProblemInstance {
  Matrix L, S, D;
  Index r_true = 0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  Structure structure = Structure::gaussian;
  int clusters = 1;
};

inline ProblemInstance finish_instance(Matrix l, Matrix s, Index r, double rho,
                                       std::uint64_t seed, Structure tag, int clusters) {
  ProblemInstance inst;
  inst.L = std::move(l);
  inst.D = inst.L + s;
  inst.S = inst.D - inst.L;
  inst.r_true = r;
  inst.rho = rho;
  inst.seed = seed;
  inst.structure = tag;
  inst.clusters = clusters;
  return inst;
}

inline ProblemInstance make_gaussian_instance(Index n1, Index n2, Index r, double rho,
                                              double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  Matrix l = gen_gaussian_lr(n1, n2, r, rng.derive(1));
  Matrix s = gen_bernoulli_sparse(n1, n2, rho, amplitude, rng.derive(2));
  return finish_instance(std::move(l), std::move(s), r, rho, seed, Structure::gaussian, 1);
}

// Clustered columns in the style of the comparison experiments: the first
// half of the clusters is wide, the second half is narrow and optionally
// louder by `loud_scale`.
inline ProblemInstance make_clustered_instance(Index n1, Index total_cols, Index r, int n,
                                               double loud_scale, double big_weight,
                                               double small_weight, double rho, double amplitude,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Index> sizes = imbalanced_block_sizes(total_cols, r, n, big_weight, small_weight);
  std::vector<double> scales(static_cast<std::size_t>(n), 1.0);
  for (int i = n / 2; i < n; ++i) scales[static_cast<std::size_t>(i)] = loud_scale;
  Rng g = rng.derive(1);
  Matrix l = gen_clustered(n1, r, n, sizes, scales, g);
  Matrix s = gen_bernoulli_sparse(n1, l.cols(), rho, amplitude, rng.derive(2));
  return finish_instance(std::move(l), std::move(s), r, rho, seed, Structure::clustered, n);
}

inline ProblemInstance make_doubly_clustered_instance(Index n, Index r, int n_clusters,
                                                      double rho, double amplitude,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  Matrix l = gen_doubly_clustered(n, r, n_clusters, rng.derive(1));
  Matrix s = gen_bernoulli_sparse(n, n, rho, amplitude, rng.derive(2));
  return finish_instance(std::move(l), std::move(s), r, rho, seed, Structure::doubly_clustered,
                         n_clusters);
}

// Column stream over a slowly rotating subspace.
struct StreamSpec {
  Index n1 = 0;
  Index r = 0;
  double alpha = 0.0;  // rotation strength
  int n = 1;           // rotate every n columns
  Index n2 = 0;        // stream length
  double rho = 0.0;
  double amplitude = 1.0;
};

// Emits d_k = U q_k + s_k; every n columns the basis U is replaced by the
// dominant left singular vectors of U + alpha * E with a fresh Gaussian E.
// The truth column l_k uses U as of emission time.
class ColumnStream {
 public:
  struct Column {
    Vector d;
    Vector l_true;
  };

  ColumnStream(const StreamSpec& spec, Rng rng) : spec_(spec), rng_(rng) {
    require(spec.n1 >= 1 && spec.r >= 1 && spec.r < spec.n1, "stream: invalid dimensions");
    require(spec.n >= 1, "stream: rotation period must be >= 1");
    require(spec.alpha >= 0.0, "stream: alpha must be nonnegative");
    require(spec.rho >= 0.0 && spec.rho <= 1.0, "stream: rho must be in [0,1]");
    basis_ = random_orthonormal(spec.n1, spec.r, rng_);
  }

  bool done() const { return emitted_ >= spec_.n2; }
  Index emitted() const { return emitted_; }
  const Matrix& basis() const { return basis_; }

  Column next() {
    require(!done(), "stream exhausted");
    Matrix e = gaussian_matrix(spec_.n1, spec_.r, rng_);
    Vector q(spec_.r);
    for (Index i = 0; i < spec_.r; ++i) q[i] = rng_.gaussian();
    Column col;
    col.l_true = basis_ * q;
    Vector s = Vector::Zero(spec_.n1);
    for (Index i = 0; i < spec_.n1; ++i)
      if (rng_.bernoulli(spec_.rho)) s[i] = spec_.amplitude * rng_.rademacher();
    col.d = col.l_true + s;
    ++emitted_;
    if (spec_.alpha > 0.0 && emitted_ % spec_.n == 0) {
      Eigen::BDCSVD<Matrix> svd(basis_ + spec_.alpha * e, Eigen::ComputeThinU);
      basis_ = svd.matrixU().leftCols(spec_.r);
    }
    return col;
  }

  // Materializes the whole stream; truth columns are packed alongside.
  static std::pair<Matrix, Matrix> materialize(const StreamSpec& spec, Rng rng) {
    ColumnStream stream(spec, rng);
    Matrix d(spec.n1, spec.n2), l(spec.n1, spec.n2);
    for (Index k = 0; k < spec.n2; ++k) {
      Column c = stream.next();
      d.col(k) = c.d;
      l.col(k) = c.l_true;
    }
    return {std::move(d), std::move(l)};
  }

 private:
  StreamSpec spec_;
  Rng rng_;
  Matrix basis_;
  Index emitted_ = 0;
};

}  // namespace skd

#endif  // SKD_DATAGEN_HPP
