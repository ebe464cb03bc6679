#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dropfact/matrix.hpp"
#include "dropfact/trainers.hpp"

namespace dropfact {

struct SynthSpec {
  std::size_t m = 40;
  std::size_t n = 40;
  std::size_t true_d = 5;
  double factor_std = 0.1;
  double noise_std = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  DenseMatrix x;
  FactorPair ground_truth;
};

/// X = U0 V0^T + Z0 with U0, V0 ~ N(0, factor_std^2) and Z0 ~ N(0, noise_std^2),
/// drawn in that order from Rng(spec.seed).
SyntheticData gen_synthetic(const SynthSpec& spec);

/// Number of sigma_i > rel_tol * sigma_1; zero for an all-zero spectrum.
std::size_t numerical_rank(const std::vector<double>& singulars, double rel_tol);

enum class Scale { desk, paper };

/// Parameters of either study. Fields not used by a study are ignored by it.
struct StudyConfig {
  SynthSpec data;
  /// Equivalence study only: regenerate X per cell with true_d equal to the
  /// cell's factor width, capped at min(m, n).
  bool width_matched_data = true;
  std::vector<double> theta_grid;
  double theta_bar = 0.9;
  std::vector<std::size_t> d_grid;
  std::size_t iterations = 1000;
  std::optional<double> step0;
  double step_tau = 1000.0;
  Scale scale = Scale::desk;
  double rank_tol = 1e-3;
  double burn_in_fraction = 0.2;

  void validate() const;
};

StudyConfig equivalence_preset(Scale scale);
StudyConfig spectrum_preset(Scale scale);

/// How closely the EMA of the sampled objective follows the deterministic
/// objective of the same iterate, after the burn-in prefix.
struct TrackingStats {
  double max_rel_dev = 0.0;
  double mean_rel_dev = 0.0;
  /// |mean(stochastic) - mean(deterministic)| / mean(deterministic) over the window.
  double window_mean_rel_dev = 0.0;
  std::size_t first_iter = 0;
};

TrackingStats ema_tracking(const TrainTrace& stochastic_trace, double burn_in_fraction);

struct EquivalenceCell {
  double theta;
  std::size_t d;
  double step0;
  TrainTrace stochastic;
  TrainTrace deterministic;
  TrackingStats tracking;
};

/// One stochastic and one deterministic run per (theta, d) cell from the same
/// initialization and step schedule. Cells run in parallel (DROPFACT_THREADS)
/// and come back in grid order: theta-major, then d.
std::vector<EquivalenceCell> run_equivalence_study(const StudyConfig& config);

struct SpectrumReport {
  std::string method;
  std::size_t d;
  std::vector<double> singulars;
  std::size_t numerical_rank;
  std::optional<double> rel_frob_dist_to_closed_form;
};

struct SpectrumStudy {
  double lambda_closed_form;
  DenseMatrix data;
  DenseMatrix closed_form;
  std::vector<SpectrumReport> reports;
  /// Solutions in the same order as `reports`.
  std::vector<DenseMatrix> solutions;
};

/// For each d: fixed-rate regularized GD (lambda = (1-theta_bar)/theta_bar),
/// adaptive-rate regularized GD (lambda = lambda_d(d, theta_bar)) and the
/// closed-form squared-nuclear-norm solution at lambda_1.
SpectrumStudy run_spectrum_study(const StudyConfig& config);

void write_spectra_csv(std::ostream& out, const SpectrumStudy& study);
void write_spectrum_summary_csv(std::ostream& out, const SpectrumStudy& study);
void write_equivalence_summary_csv(std::ostream& out, const std::vector<EquivalenceCell>& cells);

/// File stem for a cell's trace, e.g. "trace_theta0.3_d4_stochastic".
std::string trace_file_stem(double theta, std::size_t d, const char* mode);

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);
/// DROPFACT_THREADS when set and positive, else hardware concurrency (>= 1).
std::size_t worker_count();

}  // namespace dropfact
