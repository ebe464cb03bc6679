#include "dropfact/core.hpp"

#include <cmath>
#include <string>

namespace dropfact {
namespace {

void require_compatible(const DenseMatrix& x, const FactorPair& f) {
  if (x.rows() != f.rows_u() || x.cols() != f.rows_v()) {
    throw DimensionError("data is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         " but factors give " + std::to_string(f.rows_u()) + "x" +
                         std::to_string(f.rows_v()));
  }
}

// ||X - scale * U diag(w) V^T||_F^2 with w given per column; row-major,
// left-to-right accumulation everywhere.
double weighted_residual_norm(const DenseMatrix& x, const FactorPair& f, const double* weights,
                              double scale) {
  const auto& u = f.u();
  const auto& v = f.v();
  const std::size_t d = f.width();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto ui = u.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const auto vj = v.row(j);
      double p = 0.0;
      for (std::size_t k = 0; k < d; ++k) p += ui[k] * weights[k] * vj[k];
      const double r = x(i, j) - scale * p;
      acc += r * r;
    }
  }
  return acc;
}

}  // namespace

void require_open_unit(double theta, const char* what) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ParameterError(std::string(what) + " must lie in the open interval (0,1), got " +
                         std::to_string(theta));
  }
}

BernoulliMask::BernoulliMask(std::vector<std::uint8_t> bits, double retain_prob)
    : bits_(std::move(bits)), retain_prob_(retain_prob) {
  require_open_unit(retain_prob, "retain probability");
  for (auto& b : bits_)
    if (b > 1) throw ContractError("mask bits must be 0 or 1");
}

BernoulliMask BernoulliMask::sample(std::size_t d, double retain_prob, Rng& rng) {
  require_open_unit(retain_prob, "retain probability");
  std::vector<std::uint8_t> bits(d);
  for (auto& b : bits) b = rng.bernoulli(retain_prob) ? 1 : 0;
  return {std::move(bits), retain_prob};
}

BernoulliMask BernoulliMask::all_ones(std::size_t d, double retain_prob) {
  return {std::vector<std::uint8_t>(d, 1), retain_prob};
}

BernoulliMask BernoulliMask::all_zeros(std::size_t d, double retain_prob) {
  return {std::vector<std::uint8_t>(d, 0), retain_prob};
}

BernoulliMask BernoulliMask::from_pattern(std::uint64_t pattern, std::size_t d,
                                          double retain_prob) {
  std::vector<std::uint8_t> bits(d);
  for (std::size_t k = 0; k < d; ++k) bits[k] = (pattern >> k) & 1U;
  return {std::move(bits), retain_prob};
}

std::size_t BernoulliMask::count() const noexcept {
  std::size_t c = 0;
  for (auto b : bits_) c += b;
  return c;
}

void DropoutConfig::validate() const {
  if (const auto* fixed = std::get_if<FixedRate>(&rate_policy)) {
    require_open_unit(fixed->theta, "theta");
  } else {
    require_open_unit(std::get<AdaptiveRate>(rate_policy).theta_bar, "theta_bar");
  }
  if (iterations == 0) throw ParameterError("iterations must be positive");
  if (step0 && !(*step0 > 0.0 && std::isfinite(*step0))) {
    throw ParameterError("step0 must be a positive finite number");
  }
  if (!(step_tau > 0.0 && std::isfinite(step_tau))) {
    throw ParameterError("step_tau must be a positive finite number");
  }
}

double DropoutConfig::retain_prob(std::size_t d) const {
  if (const auto* fixed = std::get_if<FixedRate>(&rate_policy)) return fixed->theta;
  return theta_adaptive(d, std::get<AdaptiveRate>(rate_policy).theta_bar);
}

double omega(const FactorPair& f) {
  const auto cu = column_norms_squared(f.u());
  const auto cv = column_norms_squared(f.v());
  double acc = 0.0;
  for (std::size_t k = 0; k < f.width(); ++k) acc += cu[k] * cv[k];
  return acc;
}

double frob_loss(const DenseMatrix& x, const FactorPair& f) {
  require_compatible(x, f);
  const std::vector<double> ones(f.width(), 1.0);
  return weighted_residual_norm(x, f, ones.data(), 1.0);
}

double dropout_weight(double theta) {
  require_open_unit(theta, "theta");
  return (1.0 - theta) / theta;
}

double deterministic_objective(const DenseMatrix& x, const FactorPair& f, double theta) {
  const double weight = dropout_weight(theta);
  return frob_loss(x, f) + weight * omega(f);
}

double regularized_objective(const DenseMatrix& x, const FactorPair& f, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
  return frob_loss(x, f) + lambda * omega(f);
}

double masked_objective(const DenseMatrix& x, const FactorPair& f, const BernoulliMask& mask,
                        double theta) {
  require_open_unit(theta, "theta");
  require_compatible(x, f);
  if (mask.size() != f.width()) {
    throw DimensionError("mask length " + std::to_string(mask.size()) + " != factor width " +
                         std::to_string(f.width()));
  }
  std::vector<double> weights(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) weights[k] = mask[k] ? 1.0 : 0.0;
  return weighted_residual_norm(x, f, weights.data(), 1.0 / theta);
}

double exact_expected_objective(const DenseMatrix& x, const FactorPair& f, double theta) {
  require_open_unit(theta, "theta");
  const std::size_t d = f.width();
  if (d > kMaxEnumerationWidth) {
    throw CapacityError("exact expectation enumerates 2^d masks; width " + std::to_string(d) +
                        " exceeds the limit of " + std::to_string(kMaxEnumerationWidth));
  }
  double total = 0.0;
  const std::uint64_t patterns = std::uint64_t{1} << d;
  for (std::uint64_t p = 0; p < patterns; ++p) {
    const auto mask = BernoulliMask::from_pattern(p, d, theta);
    const auto kept = static_cast<int>(mask.count());
    const double prob =
        std::pow(theta, kept) * std::pow(1.0 - theta, static_cast<int>(d) - kept);
    total += prob * masked_objective(x, f, mask, theta);
  }
  return total;
}

MonteCarloEstimate monte_carlo_objective(const DenseMatrix& x, const FactorPair& f, double theta,
                                         std::size_t samples, Rng& rng) {
  if (samples == 0) throw ParameterError("monte carlo needs at least one sample");
  require_open_unit(theta, "theta");
  // Welford running mean / variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto mask = BernoulliMask::sample(f.width(), theta, rng);
    const double value = masked_objective(x, f, mask, theta);
    const double delta = value - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (value - mean);
  }
  if (samples == 1) return {mean, 0.0};
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

double theta_adaptive(std::size_t d, double theta_bar) {
  require_open_unit(theta_bar, "theta_bar");
  if (d == 0) throw ParameterError("factor width d must be at least 1");
  const double dd = static_cast<double>(d);
  return theta_bar / (dd - (dd - 1.0) * theta_bar);
}

double lambda_d(std::size_t d, double theta_bar) {
  require_open_unit(theta_bar, "theta_bar");
  if (d == 0) throw ParameterError("factor width d must be at least 1");
  // Closed form of (1 - theta(d)) / theta(d); avoids the cancellation in 1 - theta(d).
  return static_cast<double>(d) * ((1.0 - theta_bar) / theta_bar);
}

}  // namespace dropfact
