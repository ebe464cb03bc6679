#include "dropfact/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dropfact/core.hpp"
#include "dropfact/kernels.hpp"
#include "dropfact/quasinorm.hpp"
#include "dropfact/solvers.hpp"
#include "dropfact/trainers.hpp"

namespace dropfact {
namespace {

DenseMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  DenseMatrix out(rows, cols);
  for (double& e : out.data()) e = rng.normal(0.0, scale);
  return out;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

SuiteResult finish(std::string name, double max_error, double tolerance, std::string detail) {
  const bool ok = std::isfinite(max_error) && max_error <= tolerance;
  return {std::move(name), ok, max_error, tolerance, std::move(detail)};
}

double faulty_objective(const DenseMatrix& x, const FactorPair& f, double lambda, double fault) {
  return frob_loss(x, f) + lambda * omega(f) * (1.0 + fault);
}

SuiteResult enumeration_suite(const CheckOptions& opt) {
  Rng rng = Rng::derive(opt.seed, 1);
  const double thetas[] = {0.1, 0.5, 0.9};
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = pick(rng, 1, 8);
    const std::size_t n = pick(rng, 1, 8);
    const std::size_t d = pick(rng, 1, 8);
    const double theta = thetas[trial % 3];
    const DenseMatrix x = random_matrix(rng, m, n);
    const FactorPair f(random_matrix(rng, m, d), random_matrix(rng, n, d));
    const double exact = exact_expected_objective(x, f, theta);
    const double closed = faulty_objective(x, f, dropout_weight(theta), opt.omega_fault);
    worst = std::max(worst, rel(closed, exact));
  }
  return finish("mask_enumeration_identity", worst, 1e-10,
                "50 instances, m,n,d <= 8, theta in {0.1,0.5,0.9}");
}

SuiteResult gradient_suite(const CheckOptions& opt) {
  Rng rng = Rng::derive(opt.seed, 2);
  const double lambdas[] = {0.0, 0.5, 3.0};
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = pick(rng, 2, 6);
    const std::size_t n = pick(rng, 2, 6);
    const std::size_t d = pick(rng, 1, 4);
    const DenseMatrix x = random_matrix(rng, m, n);
    FactorPair f(random_matrix(rng, m, d), random_matrix(rng, n, d));
    for (double lambda : lambdas) {
      const auto g = grad_deterministic(x, f, lambda);
      double diff2 = 0.0;
      double ref2 = 0.0;
      auto probe = [&](DenseMatrix& target, const DenseMatrix& analytic) {
        for (std::size_t i = 0; i < target.size(); ++i) {
          const double saved = target.data()[i];
          target.data()[i] = saved + h;
          const double up = faulty_objective(x, f, lambda, opt.omega_fault);
          target.data()[i] = saved - h;
          const double down = faulty_objective(x, f, lambda, opt.omega_fault);
          target.data()[i] = saved;
          const double fd = (up - down) / (2.0 * h);
          diff2 += (fd - analytic.data()[i]) * (fd - analytic.data()[i]);
          ref2 += fd * fd;
        }
      };
      probe(f.u(), g.gu);
      probe(f.v(), g.gv);
      worst = std::max(worst, std::sqrt(diff2 / std::max(ref2, 1e-300)));
    }
  }
  return finish("gradient_finite_difference", worst, 1e-5,
                "10 instances x lambda in {0,0.5,3}, central differences h=1e-5");
}

SuiteResult prox_suite(const CheckOptions& opt) {
  Rng rng = Rng::derive(opt.seed, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = pick(rng, 1, 12);
    std::vector<double> x(r);
    for (double& v : x) v = 0.01 + 5.0 * rng.uniform01();
    std::sort(x.begin(), x.end(), std::greater<>());
    const double lambda = std::exp(std::log(1e-2) + rng.uniform01() * std::log(1e4));
    const auto a = l1_squared_prox(x, lambda);
    double l1 = 0.0;
    for (double v : a) l1 += v;
    const double scale = std::max(1.0, x.front());
    for (std::size_t i = 0; i < r; ++i) {
      if (a[i] > 0.0) {
        worst = std::max(worst, std::abs(a[i] - (x[i] - lambda * l1)) / scale);
      } else {
        // x_i = lambda ||a||_1 xi_i with xi_i in [0, 1]
        worst = std::max(worst, std::max(0.0, x[i] - lambda * l1) / scale);
      }
      if (a[i] < 0.0 || (i > 0 && a[i] > a[i - 1])) worst = std::max(worst, 1.0);
    }
  }
  return finish("l1_squared_prox_stationarity", worst, 1e-10,
                "100 random (x, lambda), lambda in [1e-2, 1e2]");
}

SuiteResult quasinorm_suite(const CheckOptions& opt) {
  Rng rng = Rng::derive(opt.seed, 4);
  const double c = std::numbers::sqrt2;
  double worst = 0.0;
  std::ostringstream notes;
  bool axioms_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = pick(rng, 1, 6);
    const std::size_t n = pick(rng, 1, 6);
    const std::size_t k = pick(rng, 1, std::min(m, n));
    const double theta_bar = trial % 2 ? 0.9 : 0.5;
    const DenseMatrix y = matmul_transposed(random_matrix(rng, m, k), random_matrix(rng, n, k));
    const DenseMatrix z = matmul_transposed(random_matrix(rng, m, k), random_matrix(rng, n, k));
    const double ny = quasi_norm(y, theta_bar);
    const double nz = quasi_norm(z, theta_bar);
    if (!(ny >= 0.0)) axioms_ok = false;
    if (frobenius_norm(y) >= 1e-3 && !(ny > 0.0)) axioms_ok = false;
    for (double alpha : {-2.0, 0.5}) {
      worst = std::max(worst, rel(quasi_norm(alpha * y, theta_bar), std::abs(alpha) * ny));
    }
    if (quasi_norm(y + z, theta_bar) > c * (ny + nz) * (1.0 + 1e-12)) axioms_ok = false;
    worst = std::max(worst, std::max(0.0, -envelope_gap(y, theta_bar)));
  }
  if (quasi_norm(DenseMatrix(3, 2), 0.5) != 0.0) axioms_ok = false;
  if (!axioms_ok) worst = std::max(worst, 1.0);
  return finish("quasi_norm_axioms", worst, 1e-10,
                "200 samples: nonnegativity, definiteness, homogeneity, sqrt(2)-triangle");
}

SuiteResult svd_suite(const CheckOptions& opt) {
  Rng rng = Rng::derive(opt.seed, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = pick(rng, 1, 10);
    const std::size_t n = pick(rng, 1, 10);
    const DenseMatrix x = random_matrix(rng, m, n);
    const auto dec = svd(x);
    worst = std::max(worst, frobenius_norm(dec.reconstruct() - x) / frobenius_norm(x));
    const std::size_t r = dec.singulars.size();
    const DenseMatrix eye = DenseMatrix::identity(r);
    worst = std::max(worst, frobenius_norm(matmul(dec.left.transposed(), dec.left) - eye));
    worst = std::max(worst, frobenius_norm(matmul(dec.right.transposed(), dec.right) - eye));
    for (std::size_t i = 1; i < r; ++i)
      if (dec.singulars[i] > dec.singulars[i - 1]) worst = std::max(worst, 1.0);
  }
  return finish("svd_invariants", worst, 1e-10, "20 random shapes up to 10x10");
}

SuiteResult kernel_suite(const CheckOptions& opt) {
  Rng rng = Rng::derive(opt.seed, 6);
  const auto& ref = kernels::detail::scalar_table();
  const auto& simd = kernels::table(kernels::best_supported());
  double worst = 0.0;
  for (std::size_t n : {0, 1, 3, 4, 7, 8, 9, 31, 64, 257}) {
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (double& v : x) v = rng.normal(0.0, 1.0);
    for (double& v : y) v = rng.normal(0.0, 1.0);
    double scale = 1e-300;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]);
    worst = std::max(worst, std::abs(ref.dot(x.data(), y.data(), n) -
                                     simd.dot(x.data(), y.data(), n)) / scale);
    auto y1 = y;
    auto y2 = y;
    ref.axpy(0.7, x.data(), y1.data(), n);
    simd.axpy(0.7, x.data(), y2.data(), n);
    auto x1 = x;
    auto x2 = x;
    auto z1 = y;
    auto z2 = y;
    ref.rot(x1.data(), z1.data(), n, 0.6, 0.8);
    simd.rot(x2.data(), z2.data(), n, 0.6, 0.8);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(y1[i] - y2[i]) / (std::abs(y1[i]) + 1.0));
      worst = std::max(worst, std::abs(x1[i] - x2[i]) / (std::abs(x1[i]) + 1.0));
      worst = std::max(worst, std::abs(z1[i] - z2[i]) / (std::abs(z1[i]) + 1.0));
    }
  }
  return finish("kernel_equivalence", worst, 1e-13,
                std::string("scalar vs ") + std::string(kernels::name(simd.isa)));
}

}  // namespace

std::vector<SuiteResult> run_checks(const CheckOptions& options) {
  return {enumeration_suite(options), gradient_suite(options), prox_suite(options),
          quasinorm_suite(options),   svd_suite(options),      kernel_suite(options)};
}

}  // namespace dropfact
