#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dropfact/core.hpp"
#include "dropfact/matrix.hpp"

namespace dropfact {

/// step(t) = step0 / (1 + t / tau)
struct StepSchedule {
  double step0;
  double tau;

  StepSchedule(double step0, double tau);
  double operator()(std::size_t t) const noexcept {
    return step0 / (1.0 + static_cast<double>(t) / tau);
  }
};

struct TraceRecord {
  std::size_t iter;
  std::optional<double> stochastic_obj;
  double deterministic_obj;
  double ema_obj;
  double step;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  FactorPair final_factors;
};

inline constexpr double kEmaDecay = 0.99;
inline constexpr double kDivergenceLimit = 1e12;
inline constexpr double kInitStddev = 0.1;

/// One dropout SGD update for a fixed mask:
///   U += (2 step / theta) (X - U diag(r) V^T / theta) V diag(r)
///   V += (2 step / theta) (X - U diag(r) V^T / theta)^T U diag(r)
/// Both factors use the residual at the incoming iterate. Columns with r_k = 0
/// are copied through untouched.
FactorPair sgd_dropout_step(const DenseMatrix& x, const FactorPair& f, const BernoulliMask& mask,
                            double theta, double step);

struct FactorGradient {
  DenseMatrix gu;
  DenseMatrix gv;
};

/// Gradient of ||X - U V^T||_F^2 + lambda * Omega(U, V).
FactorGradient grad_deterministic(const DenseMatrix& x, const FactorPair& f, double lambda);

/// Gaussian N(0, 0.1^2) factors, U drawn first then V, row-major.
FactorPair init_factors(std::size_t m, std::size_t n, std::size_t d, Rng& rng);

/// Default first step for stochastic dropout: 0.5 theta^2 / ||X||_F.
double default_stochastic_step0(const DenseMatrix& x, double theta);
/// Default first step for regularized gradient descent: 0.5 / ((1 + lambda) ||X||_F).
double default_deterministic_step0(const DenseMatrix& x, double lambda);

/// Dropout SGD at width d. Every iteration draws a fresh mask, records the
/// sampled objective and the deterministic objective of the current iterate,
/// then applies sgd_dropout_step. Seeded entirely by config.seed.
TrainTrace train_stochastic(const DenseMatrix& x, std::size_t d, const DropoutConfig& config);

/// Gradient descent on frob_loss + lambda * Omega at width d, initialized
/// exactly like train_stochastic for the same seed.
TrainTrace train_deterministic(const DenseMatrix& x, std::size_t d, double lambda,
                               const DropoutConfig& config);

/// CSV with header `iter,stochastic_obj,deterministic_obj,ema_obj,step`.
/// Absent stochastic samples are written as empty fields.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace dropfact
