#pragma once
// Shared helpers for the test binaries: random instances and plain-loop
// reference implementations that avoid the library's kernels entirely.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dropfact/matrix.hpp"
#include "dropfact/rng.hpp"

namespace dropfact::testing {

inline DenseMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                                 double scale = 1.0) {
  DenseMatrix out(rows, cols);
  for (double& e : out.data()) e = rng.normal(0.0, scale);
  return out;
}

inline FactorPair random_factors(Rng& rng, std::size_t m, std::size_t n, std::size_t d,
                                 double scale = 1.0) {
  return {random_matrix(rng, m, d, scale), random_matrix(rng, n, d, scale)};
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

// Reference a * b^T by triple loop.
inline DenseMatrix ref_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

inline double ref_frob2(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return s;
}

inline double ref_omega(const FactorPair& f) {
  double total = 0.0;
  for (std::size_t k = 0; k < f.width(); ++k) {
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < f.rows_u(); ++i) nu += f.u()(i, k) * f.u()(i, k);
    for (std::size_t i = 0; i < f.rows_v(); ++i) nv += f.v()(i, k) * f.v()(i, k);
    total += nu * nv;
  }
  return total;
}

// Random orthogonal matrix: modified Gram-Schmidt on a Gaussian matrix.
inline DenseMatrix random_orthogonal(Rng& rng, std::size_t n) {
  DenseMatrix q = random_matrix(rng, n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= c * q(i, k);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
  }
  return q;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

}  // namespace dropfact::testing
