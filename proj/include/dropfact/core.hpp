#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "dropfact/errors.hpp"
#include "dropfact/matrix.hpp"
#include "dropfact/rng.hpp"

namespace dropfact {

/// One realization r in {0,1}^d of the column-dropout mask.
class BernoulliMask {
 public:
  BernoulliMask(std::vector<std::uint8_t> bits, double retain_prob);

  /// Draws d independent Ber(retain_prob) bits, one generator output each.
  static BernoulliMask sample(std::size_t d, double retain_prob, Rng& rng);
  static BernoulliMask all_ones(std::size_t d, double retain_prob);
  static BernoulliMask all_zeros(std::size_t d, double retain_prob);
  /// Mask whose bit k is bit k of `pattern`.
  static BernoulliMask from_pattern(std::uint64_t pattern, std::size_t d, double retain_prob);

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t k) const noexcept { return bits_[k] != 0; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  double retain_prob() const noexcept { return retain_prob_; }
  std::size_t count() const noexcept;

 private:
  std::vector<std::uint8_t> bits_;
  double retain_prob_;
};

struct FixedRate {
  double theta;
};
struct AdaptiveRate {
  double theta_bar;
};
using RatePolicy = std::variant<FixedRate, AdaptiveRate>;

/// Configuration shared by both trainers.
///
/// step0 left empty selects the trainer's data-dependent default (see
/// trainers.hpp). Rates must lie strictly inside (0,1); validate() enforces it
/// and every constructor path in this library calls it.
struct DropoutConfig {
  RatePolicy rate_policy = FixedRate{0.5};
  std::uint64_t seed = 0;
  std::size_t iterations = 1000;
  std::optional<double> step0;
  double step_tau = 1000.0;

  void validate() const;
  /// Retain probability used at width d.
  double retain_prob(std::size_t d) const;
};

/// Throws ParameterError unless 0 < theta < 1.
void require_open_unit(double theta, const char* what);

/// Omega(U,V) = sum_k ||u_k||^2 ||v_k||^2.
double omega(const FactorPair& f);

/// ||X - U V^T||_F^2, accumulated row-major, left to right.
double frob_loss(const DenseMatrix& x, const FactorPair& f);

/// frob_loss + ((1 - theta) / theta) * omega.
double deterministic_objective(const DenseMatrix& x, const FactorPair& f, double theta);

/// frob_loss + lambda * omega for an arbitrary weight lambda >= 0.
double regularized_objective(const DenseMatrix& x, const FactorPair& f, double lambda);

/// ||X - (1/theta) U diag(r) V^T||_F^2 for one mask realization.
double masked_objective(const DenseMatrix& x, const FactorPair& f, const BernoulliMask& mask,
                        double theta);

/// Largest width accepted by exact_expected_objective (2^d masks).
inline constexpr std::size_t kMaxEnumerationWidth = 20;

/// Brute-force expectation of masked_objective over all 2^d masks.
double exact_expected_objective(const DenseMatrix& x, const FactorPair& f, double theta);

struct MonteCarloEstimate {
  double mean;
  /// Sample standard deviation / sqrt(samples); zero when samples == 1.
  double std_error;
};

MonteCarloEstimate monte_carlo_objective(const DenseMatrix& x, const FactorPair& f, double theta,
                                         std::size_t samples, Rng& rng);

/// theta(d) = theta_bar / (d - (d - 1) theta_bar), in (0,1) for every d >= 1.
double theta_adaptive(std::size_t d, double theta_bar);

/// lambda_d = (1 - theta(d)) / theta(d) = d (1 - theta_bar) / theta_bar.
double lambda_d(std::size_t d, double theta_bar);

/// (1 - theta) / theta
double dropout_weight(double theta);

}  // namespace dropfact
