#include "dropfact/quasinorm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "dropfact/core.hpp"
#include "dropfact/errors.hpp"
#include "dropfact/kernels.hpp"
#include "dropfact/solvers.hpp"

namespace dropfact {

FactorPair doubling_construction(const FactorPair& f) {
  const double half_sqrt2 = std::numbers::sqrt2 / 2.0;
  const std::size_t d = f.width();
  auto widen = [&](const DenseMatrix& a) {
    DenseMatrix out(a.rows(), 2 * d);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        out(i, k) = half_sqrt2 * a(i, k);
        out(i, k + d) = half_sqrt2 * a(i, k);
      }
    }
    return out;
  };
  return {widen(f.u()), widen(f.v())};
}

DenseMatrix equalize_diagonal(std::span<const double> values) {
  const std::size_t d = values.size();
  if (d == 0) throw ParameterError("equalize_diagonal: need at least one value");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ContractError("equalize_diagonal: values must be nonnegative and finite");
    }
  }
  const double trace = std::accumulate(values.begin(), values.end(), 0.0);
  const double target = trace / static_cast<double>(d);

  // m holds W^T D W; wt holds W^T so that column rotations of W are row
  // rotations of wt.
  DenseMatrix m = DenseMatrix::diagonal(values);
  DenseMatrix wt = DenseMatrix::identity(d);
  const double stop = 1e-12 * trace;

  const std::size_t max_rotations = d * d;
  for (std::size_t rotation = 0;; ++rotation) {
    std::size_t hi = 0;
    std::size_t lo = 0;
    for (std::size_t k = 1; k < d; ++k) {
      if (m(k, k) > m(hi, hi)) hi = k;
      if (m(k, k) < m(lo, lo)) lo = k;
    }
    if (m(hi, hi) - m(lo, lo) <= stop) break;
    if (rotation >= max_rotations) {
      throw NumericalError("equalize_diagonal: no convergence after " +
                           std::to_string(max_rotations) + " rotations");
    }
    // New m(hi,hi) after rotating by phi is
    //   (a+b)/2 + (a-b)/2 cos 2phi + m_hl sin 2phi,
    // which sweeps from a to b on [0, pi/2]; pick phi that lands on target.
    const double a = m(hi, hi);
    const double b = m(lo, lo);
    const double off = m(hi, lo);
    const double half_diff = 0.5 * (a - b);
    const double radius = std::hypot(half_diff, off);
    const double delta = std::atan2(off, half_diff);
    const double ratio = std::clamp((target - 0.5 * (a + b)) / radius, -1.0, 1.0);
    const double phi = 0.5 * (delta + std::acos(ratio));
    const double c = std::cos(phi);
    const double s = std::sin(phi);

    // Columns hi, lo of W: (w_h, w_l) <- (c w_h + s w_l, c w_l - s w_h).
    kernels::rot(wt.row(hi), wt.row(lo), c, s);
    // m <- G^T m G: rotate rows then columns.
    kernels::rot(m.row(hi), m.row(lo), c, s);
    for (std::size_t r = 0; r < d; ++r) {
      const double mh = m(r, hi);
      const double ml = m(r, lo);
      m(r, hi) = c * mh + s * ml;
      m(r, lo) = c * ml - s * mh;
    }
    m(hi, hi) = target;
  }
  return wt.transposed();
}

namespace {

std::size_t rank_at(const std::vector<double>& singulars, double rel_tol) {
  if (singulars.empty() || singulars.front() <= 0.0) return 0;
  const double cut = rel_tol * singulars.front();
  std::size_t r = 0;
  while (r < singulars.size() && singulars[r] > cut) ++r;
  return r;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

EqualizedFactorization build_equalized(const DenseMatrix& y, const SvdResult& dec, std::size_t r,
                                       std::size_t d, double theta_bar) {
  DenseMatrix u(y.rows(), d);
  DenseMatrix v(y.cols(), d);
  if (r > 0) {
    std::vector<double> padded(d, 0.0);
    std::copy_n(dec.singulars.begin(), r, padded.begin());
    const DenseMatrix w = equalize_diagonal(padded);
    // U = L_r diag(sqrt(sigma_r)) P, V = R_r diag(sqrt(sigma_r)) P, P = W[0:r, :].
    for (std::size_t k = 0; k < r; ++k) {
      const double root = std::sqrt(dec.singulars[k]);
      const auto pk = w.row(k);
      for (std::size_t i = 0; i < y.rows(); ++i) kernels::axpy(root * dec.left(i, k), pk, u.row(i));
      for (std::size_t j = 0; j < y.cols(); ++j) kernels::axpy(root * dec.right(j, k), pk, v.row(j));
    }
  }
  FactorPair f(std::move(u), std::move(v));
  const double value = lambda_d(d, theta_bar) * omega(f);
  return {std::move(f), value};
}

}  // namespace

EqualizedFactorization equalized_factorization(const DenseMatrix& y, std::size_t d,
                                               double theta_bar) {
  require_open_unit(theta_bar, "theta_bar");
  if (d == 0) throw ParameterError("equalized_factorization: width must be at least 1");
  const SvdResult dec = svd(y);
  const std::size_t r = rank_at(dec.singulars, kQuasiNormRankTolerance);
  if (d < r) {
    throw ContractError("equalized_factorization: width " + std::to_string(d) +
                        " is below the numerical rank " + std::to_string(r));
  }
  return build_equalized(y, dec, r, d, theta_bar);
}

QuasiNormCertificate quasi_norm_certified(const DenseMatrix& y, double theta_bar) {
  require_open_unit(theta_bar, "theta_bar");
  const SvdResult dec = svd(y);
  const std::size_t r = rank_at(dec.singulars, kQuasiNormRankTolerance);
  const double nuclear = sum(dec.singulars);
  const double lower = std::sqrt(lambda_d(1, theta_bar)) * nuclear;
  if (r == 0) return {0.0, lower, 0, lower == 0.0};
  const auto eq = build_equalized(y, dec, r, r, theta_bar);
  const double value = std::sqrt(eq.achieved_value);
  const double gap = std::abs(value - lower);
  return {value, lower, r, gap <= kCertificateTolerance * std::max(lower, value)};
}

double quasi_norm(const DenseMatrix& y, double theta_bar) {
  const auto cert = quasi_norm_certified(y, theta_bar);
  if (!cert.certified) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "quasi_norm: construction value " << cert.value << " and envelope bound "
        << cert.lower_bound << " disagree beyond tolerance (gap "
        << cert.value - cert.lower_bound << ")";
    throw NumericalError(msg.str());
  }
  return cert.value;
}

double envelope_gap(const DenseMatrix& y, double theta_bar) {
  const auto cert = quasi_norm_certified(y, theta_bar);
  return 0.5 * cert.value * cert.value - 0.5 * cert.lower_bound * cert.lower_bound;
}

}  // namespace dropfact
