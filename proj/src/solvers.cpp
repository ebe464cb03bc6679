#include "dropfact/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dropfact/errors.hpp"
#include "dropfact/kernels.hpp"

namespace dropfact {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Fills the rows listed in `missing` with unit vectors orthogonal to every
// filled row. Each slot takes the standard basis vector with the largest
// component outside the current span (two Gram-Schmidt passes), so the
// residual never falls below 1/sqrt(dim).
void complete_basis(DenseMatrix& basis_t, const std::vector<std::size_t>& missing,
                    std::vector<bool>& filled) {
  const std::size_t dim = basis_t.cols();
  auto residual = [&](std::size_t axis) {
    std::vector<double> e(dim, 0.0);
    e[axis] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < basis_t.rows(); ++j) {
        if (!filled[j]) continue;
        kernels::axpy(-kernels::dot(basis_t.row(j), e), basis_t.row(j), e);
      }
    }
    return e;
  };
  for (std::size_t slot : missing) {
    std::size_t best_axis = 0;
    double best = -1.0;
    for (std::size_t axis = 0; axis < dim; ++axis) {
      // Cheap score: squared norm of the projection complement of e_axis.
      double proj = 0.0;
      for (std::size_t j = 0; j < basis_t.rows(); ++j) {
        if (filled[j]) proj += basis_t(j, axis) * basis_t(j, axis);
      }
      if (1.0 - proj > best) {
        best = 1.0 - proj;
        best_axis = axis;
      }
    }
    std::vector<double> e = residual(best_axis);
    const double norm = std::sqrt(kernels::sum_squares(e));
    if (!(norm > 0.1 / std::sqrt(static_cast<double>(dim)))) {
      throw NumericalError("svd: could not complete orthonormal basis");
    }
    auto dst = basis_t.row(slot);
    for (std::size_t i = 0; i < dim; ++i) dst[i] = e[i] / norm;
    filled[slot] = true;
  }
}

// Tall case (m >= n): orthogonalize the columns of x with plane rotations.
SvdResult jacobi_tall(const DenseMatrix& x) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  DenseMatrix work = x.transposed();          // row j = column j of x
  DenseMatrix right_t = DenseMatrix::identity(n);  // row j = column j of R
  const double tol = static_cast<double>(m) * kEps;

  bool converged = n < 2;
  for (int sweep = 0; sweep < kSvdMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = kernels::sum_squares(work.row(p));
        const double beta = kernels::sum_squares(work.row(q));
        const double gamma = kernels::dot(work.row(p), work.row(q));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        // (a_p, a_q) <- (c a_p - s a_q, s a_p + c a_q)
        kernels::rot(work.row(p), work.row(q), c, -s);
        kernels::rot(right_t.row(p), right_t.row(q), c, -s);
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("svd: one-sided Jacobi did not converge in " +
                         std::to_string(kSvdMaxSweeps) + " sweeps");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(kernels::sum_squares(work.row(j)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  const double sigma_max = sigma[order[0]];
  const double zero_cut = static_cast<double>(std::max(m, n)) * kEps * sigma_max;

  SvdResult out{DenseMatrix(m, n), std::vector<double>(n), DenseMatrix(n, n)};
  DenseMatrix left_t(n, m);
  std::vector<bool> filled(n, false);
  std::vector<std::size_t> missing;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    const double s = sigma[j];
    auto rv = right_t.row(j);
    for (std::size_t i = 0; i < n; ++i) out.right(i, k) = rv[i];
    if (s > zero_cut && s > 0.0) {
      out.singulars[k] = s;
      auto src = work.row(j);
      auto dst = left_t.row(k);
      for (std::size_t i = 0; i < m; ++i) dst[i] = src[i] / s;
      filled[k] = true;
    } else {
      out.singulars[k] = 0.0;
      missing.push_back(k);
    }
  }
  complete_basis(left_t, missing, filled);
  out.left = left_t.transposed();
  return out;
}

void require_prox_input(std::span<const double> x, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractError("l1-squared prox: lambda must be a nonnegative finite number");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
      throw ContractError("l1-squared prox: entry " + std::to_string(i) +
                          " is not strictly positive");
    }
    if (i > 0 && x[i] > x[i - 1]) {
      throw ContractError("l1-squared prox: input must be sorted nonincreasing (entry " +
                          std::to_string(i) + ")");
    }
  }
}

}  // namespace

DenseMatrix SvdResult::reconstruct() const {
  DenseMatrix scaled = left;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < scaled.cols(); ++k) scaled(i, k) *= singulars[k];
  return matmul_transposed(scaled, right);
}

SvdResult svd(const DenseMatrix& x) {
  if (!x.all_finite()) throw ParameterError("svd: input has non-finite entries");
  if (x.rows() >= x.cols()) return jacobi_tall(x);
  SvdResult t = jacobi_tall(x.transposed());
  return {std::move(t.right), std::move(t.singulars), std::move(t.left)};
}

double nuclear_norm(const DenseMatrix& x) {
  const auto s = svd(x).singulars;
  return std::accumulate(s.begin(), s.end(), 0.0);
}

ShrinkagePlan plan_shrinkage(std::span<const double> x, double lambda) {
  require_prox_input(x, lambda);
  ShrinkagePlan plan;
  double prefix = 0.0;
  for (std::size_t k = 1; k <= x.size(); ++k) {
    prefix += x[k - 1];
    const double kd = static_cast<double>(k);
    const double mean = prefix / kd;
    const double shift = lambda * kd / (1.0 + lambda * kd) * mean;
    if (x[k - 1] - shift > kShrinkTieTolerance) {
      plan.d_active = k;
      plan.mu = shift;
      plan.mean_top = mean;
    }
  }
  return plan;
}

std::vector<double> l1_squared_prox(std::span<const double> x, double lambda) {
  const ShrinkagePlan plan = plan_shrinkage(x, lambda);
  std::vector<double> a(x.size(), 0.0);
  for (std::size_t i = 0; i < plan.d_active; ++i) a[i] = x[i] - plan.mu;
  return a;
}

DenseMatrix nuclear_squared_solve(const DenseMatrix& x, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("nuclear_squared_solve: lambda must be positive");
  }
  const SvdResult dec = svd(x);
  std::size_t positive = 0;
  while (positive < dec.singulars.size() && dec.singulars[positive] > 0.0) ++positive;

  DenseMatrix y(x.rows(), x.cols());
  if (positive == 0) return y;
  const auto a = l1_squared_prox(std::span(dec.singulars).first(positive), lambda);
  const DenseMatrix rt = dec.right.transposed();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) continue;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double coeff = a[k] * dec.left(i, k);
      if (coeff != 0.0) kernels::axpy(coeff, rt.row(k), y.row(i));
    }
  }
  return y;
}

double objective_nuclear_squared(const DenseMatrix& x, const DenseMatrix& y, double lambda) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("objective_nuclear_squared: shape mismatch");
  }
  const double nuc = nuclear_norm(y);
  return frobenius_norm_squared(x - y) + lambda * nuc * nuc;
}

}  // namespace dropfact
