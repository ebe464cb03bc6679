#pragma once

#include <cstddef>
#include <span>

#include "dropfact/matrix.hpp"

namespace dropfact {

/// A = (sqrt(2)/2)[U, U], B = (sqrt(2)/2)[V, V]: same product, half the Omega.
FactorPair doubling_construction(const FactorPair& f);

/// Orthogonal W (d x d) such that W^T diag(values) W has every diagonal entry
/// equal to the mean of `values`. Pairwise Givens rotations between the current
/// largest and smallest diagonal entries, each pinning one entry to the mean.
/// Throws NumericalError if d^2 rotations do not suffice.
DenseMatrix equalize_diagonal(std::span<const double> values);

struct EqualizedFactorization {
  FactorPair factors;
  /// lambda_d * Omega(U, V)
  double achieved_value;
};

/// Singular values at or below this fraction of sigma_max count as zero.
inline constexpr double kQuasiNormRankTolerance = 1e-10;

/// Factorization of Y at width d >= rank(Y) whose column products
/// ||u_k||^2 ||v_k||^2 are all equal to (||Y||_* / d)^2.
EqualizedFactorization equalized_factorization(const DenseMatrix& y, std::size_t d,
                                               double theta_bar);

struct QuasiNormCertificate {
  /// sqrt(lambda_d Omega) of the equalized construction (upper bound).
  double value;
  /// sqrt(((1 - theta_bar)/theta_bar)) ||Y||_* (lower bound from the convex envelope).
  double lower_bound;
  std::size_t rank;
  bool certified;
};

inline constexpr double kCertificateTolerance = 1e-8;

/// Evaluates the quasi-norm and checks the upper/lower sandwich.
QuasiNormCertificate quasi_norm_certified(const DenseMatrix& y, double theta_bar);

/// Quasi-norm ||Y||_tri; throws NumericalError (reporting the gap) when the
/// sandwich certificate fails.
double quasi_norm(const DenseMatrix& y, double theta_bar);

/// (1/2)||Y||_tri^2 - ((1 - theta_bar)/(2 theta_bar)) ||Y||_*^2
double envelope_gap(const DenseMatrix& y, double theta_bar);

}  // namespace dropfact
