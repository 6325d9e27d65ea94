#ifndef SKD_COHERENCE_HPP
#define SKD_COHERENCE_HPP

#include <algorithm>
#include <cmath>

#include "skd/errors.hpp"
#include "skd/matrix.hpp"

namespace skd {

// How aligned the singular subspaces of a matrix are with the standard
// basis. High values mean information concentrates in few rows/columns and
// uniform sampling is likely to miss it.
struct CoherenceReport {
  double gamma_u = 0.0;  // sqrt(N1) * max |U(i,j)|
  double gamma_v = 0.0;  // sqrt(N2) * max |V(i,j)|
  double mu = 0.0;       // smallest value satisfying all three subspace bounds
  double uv_inf = 0.0;   // |U V^T|_inf
  Index rank = 0;
};

inline CoherenceReport coherence_of(const Matrix& l, double rank_tol = kDefaultRankTol) {
  SvdCompact svd = svd_compact(l, rank_tol);
  Index k = svd.rank;
  const Matrix& u = svd.U.matrix();
  const Matrix& v = svd.V.matrix();
  double n1 = static_cast<double>(l.rows());
  double n2 = static_cast<double>(l.cols());
  double r = static_cast<double>(k);

  CoherenceReport rep;
  rep.rank = k;
  rep.gamma_u = std::sqrt(n1) * u.cwiseAbs().maxCoeff();
  rep.gamma_v = std::sqrt(n2) * v.cwiseAbs().maxCoeff();
  double max_row_u = u.rowwise().squaredNorm().maxCoeff();
  double max_row_v = v.rowwise().squaredNorm().maxCoeff();
  rep.uv_inf = (u * v.transpose()).cwiseAbs().maxCoeff();
  rep.mu = std::max({n1 / r * max_row_u, n2 / r * max_row_v,
                     n1 * n2 / r * rep.uv_inf * rep.uv_inf});
  return rep;
}

// Unspecified constants in the sample-complexity bounds, all overridable.
// The calculators below evaluate the bound expressions literally with
// whatever constants are supplied.
struct BoundConstants {
  double c2 = 1.0, c3 = 1.0;    // column span bound
  double c2p = 1.0, c3p = 1.0;  // row span bound
  double c5 = 1.0, c6 = 1.0, c7 = 1.0, c9 = 1.0;
  double rho_r = 1.0;
  double rho_s = 0.1;
  double beta = 2.0;    // any real > 1
  double delta = 0.1;   // failure probability, in (0,1)
};

inline void validate(const BoundConstants& c) {
  require(c.beta > 1.0, "bounds: beta must exceed 1");
  require(c.delta > 0.0 && c.delta < 1.0, "bounds: delta must be in (0,1)");
}

// Columns needed so a uniform sample of them spans the column space.
inline double m1_span_term(Index r, double gamma_v, const BoundConstants& c) {
  validate(c);
  require(r >= 1, "bounds: r must be positive");
  double rd = static_cast<double>(r);
  return rd * gamma_v * gamma_v *
         std::max(c.c2 * std::log(rd), c.c3 * std::log(3.0 / c.delta));
}

// Columns needed so the sketch decomposition itself succeeds.
inline double m1_decomposition_term(Index r, double gamma_v, Index n1, const BoundConstants& c) {
  validate(c);
  require(r >= 1 && n1 >= r, "bounds: need n1 >= r >= 1");
  double rd = static_cast<double>(r);
  double logn1 = std::log(static_cast<double>(n1));
  double mu_prime = std::max({c.c7 * std::max(rd, logn1) / rd,
                              6.0 * gamma_v * gamma_v,
                              std::pow(c.c9 * gamma_v * logn1, 2.0)});
  return rd / c.rho_r * mu_prime * logn1 * logn1;
}

inline Index sufficient_m1(Index r, double gamma_v, Index n1, const BoundConstants& c) {
  return static_cast<Index>(
      std::ceil(std::max(m1_span_term(r, gamma_v, c), m1_decomposition_term(r, gamma_v, n1, c))));
}

inline Index sufficient_m2(Index r, Index n1, Index n2, const BoundConstants& c) {
  validate(c);
  require(r >= 1 && n1 >= r && n2 >= r, "bounds: need dimensions >= r >= 1");
  double rd = static_cast<double>(r);
  double logn1 = std::log(static_cast<double>(n1));
  double kappa = logn1 / rd;
  double log_pair = std::log(static_cast<double>(n1) * static_cast<double>(n2) / c.delta);
  double t1 = rd * logn1 * std::max(c.c2p * std::log(rd), c.c3p * std::log(3.0 / c.delta));
  double t2 = 2.0 * rd * c.beta * (c.beta - 2.0) * std::log(static_cast<double>(n2) / c.delta) /
              (3.0 * (c.beta - 1.0) * (c.beta - 1.0)) * (c.c6 * kappa * log_pair + 1.0);
  double t3 = c.c5 * log_pair * log_pair;
  double t4 = std::pow(3.0 / c.delta, 1.0 / 6.0);
  return static_cast<Index>(std::ceil(std::max({t1, t2, t3, t4})));
}

// Largest sparsity parameter the vector decomposition guarantee tolerates.
inline double max_rho(Index r, Index n1, Index n2, const BoundConstants& c) {
  validate(c);
  require(r >= 1 && n1 >= r && n2 >= r, "bounds: need dimensions >= r >= 1");
  double rd = static_cast<double>(r);
  double kappa = std::log(static_cast<double>(n1)) / rd;
  double log_pair = std::log(static_cast<double>(n1) * static_cast<double>(n2) / c.delta);
  return std::min(c.rho_s, 0.5 / (rd * c.beta * (c.c6 * kappa * log_pair + 1.0)));
}

}  // namespace skd

#endif  // SKD_COHERENCE_HPP
