#ifndef SKD_MATRIX_HPP
#define SKD_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "skd/errors.hpp"

namespace skd {

// Dense column-major doubles back every matrix in the library: data,
// low-rank/sparse components, bases and all sketches.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kOrthoTol = 1e-10;

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw precondition_error(what + ": entries must be finite");
}

// Ordered, duplicate-free subset of [0, domain_size). Selection order is
// meaningful: greedy samplers append in the order columns were picked.
class IndexSet {
 public:
  IndexSet() = default;

  IndexSet(std::vector<Index> indices, Index domain_size)
      : indices_(std::move(indices)), domain_size_(domain_size) {
    require(domain_size_ >= 0, "IndexSet: negative domain");
    std::vector<bool> seen(static_cast<std::size_t>(domain_size_), false);
    for (Index i : indices_) {
      require(i >= 0 && i < domain_size_, "IndexSet: index out of range");
      require(!seen[static_cast<std::size_t>(i)], "IndexSet: duplicate index");
      seen[static_cast<std::size_t>(i)] = true;
    }
  }

  static IndexSet all(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return IndexSet(std::move(v), n);
  }

  Index size() const { return static_cast<Index>(indices_.size()); }
  Index domain_size() const { return domain_size_; }
  bool empty() const { return indices_.empty(); }
  const std::vector<Index>& indices() const { return indices_; }
  Index operator[](Index k) const { return indices_[static_cast<std::size_t>(k)]; }

  bool contains(Index i) const {
    return std::find(indices_.begin(), indices_.end(), i) != indices_.end();
  }

  // Composition: (this ∘ other)[k] = this[other[k]]. Selecting with `other`
  // from a matrix already selected with `this` equals selecting once with
  // the composite.
  IndexSet composed_with(const IndexSet& other) const {
    require(other.domain_size() == size(), "IndexSet: composition domain mismatch");
    std::vector<Index> v;
    v.reserve(static_cast<std::size_t>(other.size()));
    for (Index k : other.indices()) v.push_back(indices_[static_cast<std::size_t>(k)]);
    return IndexSet(std::move(v), domain_size_);
  }

  std::vector<Index> complement() const {
    std::vector<bool> seen(static_cast<std::size_t>(domain_size_), false);
    for (Index i : indices_) seen[static_cast<std::size_t>(i)] = true;
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(domain_size_ - size()));
    for (Index i = 0; i < domain_size_; ++i)
      if (!seen[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
  }

 private:
  std::vector<Index> indices_;
  Index domain_size_ = 0;
};

inline Matrix select_columns(const Matrix& a, const IndexSet& idx) {
  require(idx.domain_size() == a.cols(), "select_columns: domain size mismatch");
  Matrix out(a.rows(), idx.size());
  for (Index k = 0; k < idx.size(); ++k) out.col(k) = a.col(idx[k]);
  return out;
}

inline Matrix select_rows(const Matrix& a, const IndexSet& idx) {
  require(idx.domain_size() == a.rows(), "select_rows: domain size mismatch");
  Matrix out(idx.size(), a.cols());
  for (Index k = 0; k < idx.size(); ++k) out.row(k) = a.row(idx[k]);
  return out;
}

inline Vector select_entries(const Vector& v, const IndexSet& idx) {
  require(idx.domain_size() == v.size(), "select_entries: domain size mismatch");
  Vector out(idx.size());
  for (Index k = 0; k < idx.size(); ++k) out[k] = v[idx[k]];
  return out;
}

// Matrix whose columns form an orthonormal basis of a learned subspace.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(Matrix q) : matrix_(std::move(q)) {
    require(matrix_.rows() >= matrix_.cols(), "SubspaceBasis: more columns than rows");
    Matrix gram = matrix_.transpose() * matrix_;
    gram.diagonal().array() -= 1.0;
    double dev = gram.cwiseAbs().maxCoeff();
    require(dev <= kOrthoTol, "SubspaceBasis: columns not orthonormal");
  }

  const Matrix& matrix() const { return matrix_; }
  Index dim() const { return matrix_.cols(); }
  Index ambient_dim() const { return matrix_.rows(); }

 private:
  Matrix matrix_;
};

struct SvdCompact {
  SubspaceBasis U;  // truncated at the numerical rank
  Vector sigma;     // all min(rows, cols) values, descending, nonnegative
  SubspaceBasis V;  // truncated at the numerical rank
  Index rank;       // count of sigma_i > rank_tol * sigma_0
};

// Thin SVD with the factor bases truncated at the numerical rank. The
// trailing singular vectors of a rank-deficient matrix are numerically
// meaningless (and not reliably orthonormal), so only the spanning part is
// wrapped; U * diag(sigma.head(rank)) * V^T reconstructs the input up to
// the discarded singular values.
inline SvdCompact svd_compact(const Matrix& a, double rank_tol = kDefaultRankTol) {
  require(a.size() > 0 && a.norm() > 0.0, "zero matrix has no compact SVD");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  Index rank = 0;
  double cutoff = rank_tol * sigma[0];
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > cutoff) ++rank;
  return SvdCompact{SubspaceBasis(svd.matrixU().leftCols(rank)), sigma,
                    SubspaceBasis(svd.matrixV().leftCols(rank)), rank};
}

inline Index numerical_rank(const Matrix& a, double rank_tol = kDefaultRankTol) {
  if (a.size() == 0 || a.norm() == 0.0) return 0;
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& sigma = svd.singularValues();
  Index rank = 0;
  double cutoff = rank_tol * sigma[0];
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > cutoff) ++rank;
  return rank;
}

// Orthonormal basis of range(A), truncated at the numerical rank.
inline SubspaceBasis orthonormal_range(const Matrix& a, double rank_tol = kDefaultRankTol) {
  require(a.size() > 0 && a.norm() > 0.0, "orthonormal_range: zero matrix has no range basis");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  Index rank = 0;
  double cutoff = rank_tol * sigma[0];
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > cutoff) ++rank;
  return SubspaceBasis(svd.matrixU().leftCols(rank));
}

// (I - P_span(C)) * B. An empty C means the projector is the identity.
inline Matrix project_complement(const Matrix& c, const Matrix& b) {
  if (c.size() == 0) return b;
  require(c.rows() == b.rows(), "project_complement: row count mismatch");
  if (c.norm() == 0.0) return b;
  SubspaceBasis q = orthonormal_range(c);
  return b - q.matrix() * (q.matrix().transpose() * b);
}

// Largest singular value by power iteration on A^T A; cheap initializer for
// solver step sizes where a few digits suffice.
inline double spectral_norm_estimate(const Matrix& a, int iters = 60) {
  if (a.size() == 0) return 0.0;
  Vector v = Vector::Ones(a.cols());
  v.normalize();
  double s = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vector w = a.transpose() * (a * v);
    double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    double s_new = std::sqrt(n);
    if (i > 4 && std::abs(s_new - s) <= 1e-9 * s_new) return s_new;
    s = s_new;
  }
  return s;
}

}  // namespace skd

#endif  // SKD_MATRIX_HPP
