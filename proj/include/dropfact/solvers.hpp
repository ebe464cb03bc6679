#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dropfact/matrix.hpp"

namespace dropfact {

/// Thin SVD X = L diag(s) R^T with r = min(m, n) triplets.
struct SvdResult {
  DenseMatrix left;              // m x r, orthonormal columns
  std::vector<double> singulars; // nonincreasing, nonnegative
  DenseMatrix right;             // n x r, orthonormal columns

  DenseMatrix reconstruct() const;
};

inline constexpr int kSvdMaxSweeps = 80;

/// One-sided (Hestenes) Jacobi SVD. Singular values below
/// max(m,n) * eps * sigma_max are reported as exact zeros and their singular
/// vectors completed to an orthonormal basis. Throws NumericalError if the
/// sweeps do not converge within kSvdMaxSweeps.
SvdResult svd(const DenseMatrix& x);

/// sum of singular values
double nuclear_norm(const DenseMatrix& x);

struct ShrinkagePlan {
  std::size_t d_active = 0;
  /// Amount subtracted from each retained entry, (lambda d/(1 + lambda d)) * mean_top.
  double mu = 0.0;
  /// Mean of the top d_active entries.
  double mean_top = 0.0;
};

/// Entries whose shrunk value does not exceed this are excluded from the support.
inline constexpr double kShrinkTieTolerance = 1e-12;

/// Support size and shift of the l1-squared proximal map. Scans every width
/// k = 1..r and keeps the largest k whose smallest shrunk entry
/// x_k - (lambda k/(1 + lambda k)) mean_k stays above kShrinkTieTolerance.
/// Preconditions as for l1_squared_prox.
ShrinkagePlan plan_shrinkage(std::span<const double> x, double lambda);

/// argmin_a ||a - x||^2 + lambda ||a||_1^2 for a strictly positive,
/// nonincreasing x and lambda >= 0. Throws ContractError otherwise.
std::vector<double> l1_squared_prox(std::span<const double> x, double lambda);

/// argmin_Y ||X - Y||_F^2 + lambda ||Y||_*^2, via the prox on the singular values.
DenseMatrix nuclear_squared_solve(const DenseMatrix& x, double lambda);

/// ||X - Y||_F^2 + lambda ||Y||_*^2
double objective_nuclear_squared(const DenseMatrix& x, const DenseMatrix& y, double lambda);

}  // namespace dropfact
