#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dropfact/core.hpp"
#include "dropfact/errors.hpp"
#include "dropfact/quasinorm.hpp"
#include "dropfact/solvers.hpp"
#include "support.hpp"

using namespace dropfact;
using namespace dropfact::testing;

namespace {

DenseMatrix random_low_rank(Rng& rng, std::size_t m, std::size_t n, std::size_t k) {
  return matmul_transposed(random_matrix(rng, m, k), random_matrix(rng, n, k));
}

// lambda * Omega(A, (A^{-1} Y)^T) for invertible 2x2 A: every width-2
// factorization of a rank-2 2x2 Y has this form.
double factored_penalty(const DenseMatrix& y, const std::array<double, 4>& a, double lambda) {
  const double det = a[0] * a[3] - a[1] * a[2];
  if (std::abs(det) < 1e-9) return INFINITY;
  const DenseMatrix u(2, 2, {a[0], a[1], a[2], a[3]});
  const DenseMatrix inv(2, 2, {a[3] / det, -a[1] / det, -a[2] / det, a[0] / det});
  const DenseMatrix v = matmul(inv, y).transposed();
  return lambda * omega(FactorPair(u, v));
}

}  // namespace

TEST_CASE("doubling halves omega and keeps the product") {
  Rng rng(31);
  const auto f = random_factors(rng, 5, 3, 2);
  const auto g = doubling_construction(f);
  CHECK(g.width() == 4);
  CHECK(max_abs_diff(g.product(), f.product()) <= 1e-12 * frobenius_norm(f.product()));
  CHECK(rel_err(omega(g), omega(f) / 2) <= 1e-12);
  FactorPair h = f;
  for (int k = 0; k < 10; ++k) h = doubling_construction(h);
  CHECK(h.width() == 2 * 1024);
  CHECK(rel_err(omega(h), std::ldexp(omega(f), -10)) <= 1e-10);
  CHECK(frobenius_norm(h.product() - f.product()) <= 1e-10 * frobenius_norm(f.product()));
}

TEST_CASE("diagonal equalization") {
  const std::vector<double> constant{2, 2, 2};
  const DenseMatrix w0 = equalize_diagonal(constant);
  const DenseMatrix d0 = matmul(matmul(w0.transposed(), DenseMatrix::diagonal(constant)), w0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d0(i, i) == doctest::Approx(2.0).epsilon(1e-15));

  const std::vector<double> two{2, 0};
  const DenseMatrix w = equalize_diagonal(two);
  const DenseMatrix d = matmul(matmul(w.transposed(), DenseMatrix::diagonal(two)), w);
  CHECK(d(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(std::abs(w(0, 0)) - std::numbers::sqrt2 / 2) <= 1e-14);

  Rng rng(32);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> vals(6);
    for (double& v : vals) v = 5 * rng.uniform01();
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / 6.0;
    const DenseMatrix wr = equalize_diagonal(vals);
    CHECK(max_abs_diff(matmul(wr.transposed(), wr), DenseMatrix::identity(6)) <= 1e-13);
    const DenseMatrix dr = matmul(matmul(wr.transposed(), DenseMatrix::diagonal(vals)), wr);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(dr(i, i) - mean) <= 1e-12 * mean);
  }
}

TEST_CASE("equalized factorization invariants") {
  Rng rng(33);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = pick(rng, 1, 6), n = pick(rng, 1, 6);
    const std::size_t k = pick(rng, 1, std::min(m, n));
    const DenseMatrix y = random_low_rank(rng, m, n, k);
    const std::size_t d = k + pick(rng, 0, 4);
    const double tb = t % 2 ? 0.9 : 0.5;
    const auto eq = equalized_factorization(y, d, tb);
    CHECK(eq.factors.width() == d);
    CHECK(frobenius_norm(eq.factors.product() - y) <= 1e-8 * frobenius_norm(y));
    const double nn = nuclear_norm(y);
    const double target = (nn / static_cast<double>(d)) * (nn / static_cast<double>(d));
    const auto nu = column_norms_squared(eq.factors.u());
    const auto nv = column_norms_squared(eq.factors.v());
    for (std::size_t c = 0; c < d; ++c) CHECK(rel_err(nu[c] * nv[c], target) <= 1e-8);
    CHECK(rel_err(eq.achieved_value, lambda_d(1, tb) * nn * nn) <= 1e-8);
    // Width-invariance: the rate cancels the doubling loophole.
    CHECK(rel_err(equalized_factorization(y, 2 * d, tb).achieved_value, eq.achieved_value) <=
          1e-8);
  }
  CHECK_THROWS_AS(equalized_factorization(random_low_rank(rng, 4, 4, 3), 2, 0.5), ContractError);
}

TEST_CASE("equalized factorization: rank one, d = 1") {
  const DenseMatrix l(3, 1, {1, 2, 2}), r(2, 1, {0.6, 0.8});
  const DenseMatrix y = matmul_transposed(l, r);  // sigma = 3
  const auto eq = equalized_factorization(y, 1, 0.7);
  CHECK(rel_err(eq.achieved_value, lambda_d(1, 0.7) * 9.0) <= 1e-12);
  CHECK(rel_err(column_norms_squared(eq.factors.u())[0], 3.0) <= 1e-12);
  CHECK(rel_err(column_norms_squared(eq.factors.v())[0], 3.0) <= 1e-12);
}

TEST_CASE("equalized factorization: diag(3,1), d = 2 matches independent minimization") {
  const DenseMatrix y(2, 2, {3, 0, 0, 1});
  const auto eq = equalized_factorization(y, 2, 0.5);
  CHECK(eq.achieved_value == doctest::Approx(16.0).epsilon(1e-12));

  // Finite-difference gradient descent with backtracking over invertible A.
  const double lambda = lambda_d(2, 0.5);
  Rng rng(34);
  double best = INFINITY;
  for (int restart = 0; restart < 20; ++restart) {
    std::array<double, 4> a{};
    for (double& v : a) v = rng.normal(0.0, 1.0);
    double f = factored_penalty(y, a, lambda);
    for (int it = 0; it < 3000 && std::isfinite(f); ++it) {
      std::array<double, 4> g{};
      for (int i = 0; i < 4; ++i) {
        auto p = a, q = a;
        p[i] += 1e-6;
        q[i] -= 1e-6;
        g[i] = (factored_penalty(y, p, lambda) - factored_penalty(y, q, lambda)) / 2e-6;
      }
      double step = 0.1;
      while (step > 1e-14) {
        auto trial = a;
        for (int i = 0; i < 4; ++i) trial[i] -= step * g[i];
        const double ft = factored_penalty(y, trial, lambda);
        if (ft < f) {
          a = trial;
          f = ft;
          break;
        }
        step *= 0.5;
      }
    }
    best = std::min(best, f);
    CHECK(f >= 16.0 * (1 - 1e-9));
  }
  CHECK(best <= 16.0 * (1 + 1e-4));
}

TEST_CASE("quasi-norm axioms") {
  CHECK(quasi_norm(DenseMatrix(3, 4), 0.5) == 0.0);
  CHECK(envelope_gap(DenseMatrix(2, 2), 0.5) == 0.0);
  Rng rng(35);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = pick(rng, 1, 5), n = pick(rng, 1, 5);
    const double tb = t % 2 ? 0.9 : 0.5;
    const DenseMatrix y = random_low_rank(rng, m, n, pick(rng, 1, std::min(m, n)));
    const DenseMatrix z = random_low_rank(rng, m, n, pick(rng, 1, std::min(m, n)));
    const double ny = quasi_norm(y, tb), nz = quasi_norm(z, tb);
    CHECK(ny > 0.0);
    for (double alpha : {-2.0, 0.5}) CHECK(rel_err(quasi_norm(alpha * y, tb), std::abs(alpha) * ny) <= 1e-10);
    CHECK(quasi_norm(y + z, tb) <= std::numbers::sqrt2 * (ny + nz));
    CHECK(envelope_gap(y, tb) >= -1e-8);
    CHECK(std::abs(envelope_gap(y, tb)) <= 1e-8 * std::max(1.0, ny * ny));
  }
}

TEST_CASE("certificate reports both bounds") {
  Rng rng(36);
  const DenseMatrix y = random_low_rank(rng, 4, 3, 2);
  const auto c = quasi_norm_certified(y, 0.8);
  CHECK(c.certified);
  CHECK(c.rank == 2);
  CHECK(rel_err(c.value, c.lower_bound) <= kCertificateTolerance);
  CHECK(rel_err(c.lower_bound, std::sqrt(dropout_weight(0.8)) * nuclear_norm(y)) <= 1e-12);
}
