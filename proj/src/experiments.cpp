#include "dropfact/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "dropfact/core.hpp"
#include "dropfact/errors.hpp"
#include "dropfact/solvers.hpp"

namespace dropfact {
namespace {

// Stream ids for Rng::derive; distinct ranges keep data and trainer seeds apart.
constexpr std::uint64_t kDataStream = 0x1000;
constexpr std::uint64_t kCellStream = 0x2000;

}  // namespace

void SynthSpec::validate() const {
  if (m == 0 || n == 0) throw ParameterError("m and n must be positive");
  if (true_d == 0) throw ParameterError("true_d must be at least 1");
  if (true_d > std::min(m, n)) throw ParameterError("true_d must not exceed min(m, n)");
  if (!(factor_std > 0.0) || !std::isfinite(factor_std)) {
    throw ParameterError("factor_std must be positive");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ParameterError("noise_std must be nonnegative");
  }
}

SyntheticData gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  DenseMatrix u0(spec.m, spec.true_d);
  DenseMatrix v0(spec.n, spec.true_d);
  for (double& e : u0.data()) e = rng.normal(0.0, spec.factor_std);
  for (double& e : v0.data()) e = rng.normal(0.0, spec.factor_std);
  FactorPair truth(std::move(u0), std::move(v0));
  DenseMatrix x = truth.product();
  for (double& e : x.data()) e += rng.normal(0.0, spec.noise_std);
  return {std::move(x), std::move(truth)};
}

std::size_t numerical_rank(const std::vector<double>& singulars, double rel_tol) {
  if (singulars.empty() || !(singulars.front() > 0.0)) return 0;
  const double cut = rel_tol * singulars.front();
  return static_cast<std::size_t>(
      std::count_if(singulars.begin(), singulars.end(), [&](double s) { return s > cut; }));
}

void StudyConfig::validate() const {
  if (!width_matched_data) data.validate();
  for (double t : theta_grid) require_open_unit(t, "theta");
  require_open_unit(theta_bar, "theta_bar");
  for (std::size_t d : d_grid)
    if (d == 0) throw ParameterError("d_grid entries must be at least 1");
  if (iterations == 0) throw ParameterError("iterations must be positive");
  if (step0 && !(*step0 > 0.0)) throw ParameterError("step0 must be positive");
  if (!(step_tau > 0.0)) throw ParameterError("step_tau must be positive");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw ParameterError("rank_tol must lie in (0,1)");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw ParameterError("burn_in_fraction must lie in [0,1)");
  }
}

StudyConfig equivalence_preset(Scale scale) {
  StudyConfig c;
  c.scale = scale;
  c.width_matched_data = true;
  c.data.factor_std = 0.1;
  c.data.noise_std = 0.0;
  c.data.seed = 1;
  c.step_tau = 1000.0;
  if (scale == Scale::desk) {
    c.data.m = c.data.n = 20;
    c.theta_grid = {0.3, 0.7};
    c.d_grid = {4, 8};
    c.iterations = 5000;
  } else {
    c.data.m = c.data.n = 100;
    c.theta_grid = {0.1, 0.3, 0.5, 0.7, 0.9};
    c.d_grid = {10, 40, 160};
    c.iterations = 10000;
  }
  c.data.true_d = c.d_grid.front();
  return c;
}

StudyConfig spectrum_preset(Scale scale) {
  StudyConfig c;
  c.scale = scale;
  c.width_matched_data = false;
  c.data.factor_std = 0.1;
  c.data.noise_std = 0.01;
  c.data.seed = 1;
  c.theta_bar = 0.9;
  c.iterations = 10000;
  c.step_tau = 1000.0;
  if (scale == Scale::desk) {
    c.data.m = c.data.n = 40;
    c.data.true_d = 5;
    c.d_grid = {10, 20};
  } else {
    c.data.m = c.data.n = 100;
    c.data.true_d = 10;
    c.d_grid = {10, 40, 160};
  }
  return c;
}

TrackingStats ema_tracking(const TrainTrace& trace, double burn_in_fraction) {
  TrackingStats stats;
  const std::size_t total = trace.records.size();
  stats.first_iter = static_cast<std::size_t>(std::ceil(burn_in_fraction * total));
  double sum_dev = 0.0;
  double sum_stoch = 0.0;
  double sum_det = 0.0;
  std::size_t count = 0;
  for (std::size_t t = stats.first_iter; t < total; ++t) {
    const auto& r = trace.records[t];
    if (!r.stochastic_obj) throw ContractError("ema_tracking needs a stochastic trace");
    const double dev = std::abs(r.ema_obj - r.deterministic_obj) / r.deterministic_obj;
    stats.max_rel_dev = std::max(stats.max_rel_dev, dev);
    sum_dev += dev;
    sum_stoch += *r.stochastic_obj;
    sum_det += r.deterministic_obj;
    ++count;
  }
  if (count > 0) {
    stats.mean_rel_dev = sum_dev / static_cast<double>(count);
    stats.window_mean_rel_dev = std::abs(sum_stoch - sum_det) / sum_det;
  }
  return stats;
}

std::vector<EquivalenceCell> run_equivalence_study(const StudyConfig& config) {
  config.validate();
  if (config.theta_grid.empty() || config.d_grid.empty()) {
    throw ParameterError("equivalence study needs nonempty theta and d grids");
  }
  const std::size_t cells = config.theta_grid.size() * config.d_grid.size();
  std::vector<std::optional<EquivalenceCell>> out(cells);

  parallel_for(cells, [&](std::size_t index) {
    const double theta = config.theta_grid[index / config.d_grid.size()];
    const std::size_t d = config.d_grid[index % config.d_grid.size()];

    SynthSpec spec = config.data;
    if (config.width_matched_data) {
      spec.true_d = std::min({d, spec.m, spec.n});
      spec.seed = Rng::derive(config.data.seed, kDataStream + d).next_u64();
    }
    const DenseMatrix x = gen_synthetic(spec).x;

    DropoutConfig dc;
    dc.rate_policy = FixedRate{theta};
    dc.seed = Rng::derive(config.data.seed, kCellStream + index).next_u64();
    dc.iterations = config.iterations;
    dc.step_tau = config.step_tau;
    dc.step0 = config.step0.value_or(default_stochastic_step0(x, theta));

    auto stochastic = train_stochastic(x, d, dc);
    auto deterministic = train_deterministic(x, d, dropout_weight(theta), dc);
    const auto tracking = ema_tracking(stochastic, config.burn_in_fraction);
    out[index].emplace(EquivalenceCell{theta, d, *dc.step0, std::move(stochastic),
                                       std::move(deterministic), tracking});
  });

  std::vector<EquivalenceCell> result;
  result.reserve(cells);
  for (auto& c : out) result.push_back(std::move(*c));
  return result;
}

SpectrumStudy run_spectrum_study(const StudyConfig& config) {
  config.validate();
  if (config.d_grid.empty()) throw ParameterError("spectrum study needs a nonempty d grid");
  const DenseMatrix x = gen_synthetic(config.data).x;
  const double lambda1 = lambda_d(1, config.theta_bar);
  DenseMatrix closed = nuclear_squared_solve(x, lambda1);
  const double closed_norm = frobenius_norm(closed);

  struct Runs {
    DenseMatrix fixed;
    DenseMatrix adaptive;
  };
  std::vector<std::optional<Runs>> runs(config.d_grid.size());
  parallel_for(config.d_grid.size(), [&](std::size_t index) {
    const std::size_t d = config.d_grid[index];
    DropoutConfig dc;
    dc.rate_policy = AdaptiveRate{config.theta_bar};
    dc.seed = Rng::derive(config.data.seed, kCellStream + index).next_u64();
    dc.iterations = config.iterations;
    dc.step_tau = config.step_tau;
    dc.step0 = config.step0;
    auto fixed = train_deterministic(x, d, lambda1, dc);
    auto adaptive = train_deterministic(x, d, lambda_d(d, config.theta_bar), dc);
    runs[index].emplace(
        Runs{fixed.final_factors.product(), adaptive.final_factors.product()});
  });

  SpectrumStudy study{lambda1, x, closed, {}, {}};
  auto add = [&](const char* method, std::size_t d, const DenseMatrix& y) {
    auto s = svd(y).singulars;
    const std::size_t rank = numerical_rank(s, config.rank_tol);
    std::optional<double> dist;
    if (closed_norm > 0.0) dist = frobenius_norm(y - closed) / closed_norm;
    study.reports.push_back({method, d, std::move(s), rank, dist});
    study.solutions.push_back(y);
  };
  for (std::size_t index = 0; index < config.d_grid.size(); ++index) {
    const std::size_t d = config.d_grid[index];
    add("fixed", d, runs[index]->fixed);
    add("adaptive", d, runs[index]->adaptive);
    add("closed_form", d, closed);
  }
  return study;
}

void write_spectra_csv(std::ostream& out, const SpectrumStudy& study) {
  out << "method,d,index,sigma\n";
  for (const auto& r : study.reports)
    for (std::size_t i = 0; i < r.singulars.size(); ++i)
      out << r.method << ',' << r.d << ',' << i + 1 << ',' << format_double(r.singulars[i])
          << '\n';
}

void write_spectrum_summary_csv(std::ostream& out, const SpectrumStudy& study) {
  out << "method,d,numerical_rank,rel_frob_dist_to_closed_form\n";
  for (const auto& r : study.reports) {
    out << r.method << ',' << r.d << ',' << r.numerical_rank << ',';
    if (r.rel_frob_dist_to_closed_form) out << format_double(*r.rel_frob_dist_to_closed_form);
    out << '\n';
  }
}

void write_equivalence_summary_csv(std::ostream& out, const std::vector<EquivalenceCell>& cells) {
  out << "theta,d,step0,max_rel_dev_ema,mean_rel_dev_ema,window_mean_rel_dev,"
         "final_deterministic_obj_stochastic_run,final_obj_deterministic_run\n";
  for (const auto& c : cells) {
    out << format_double(c.theta) << ',' << c.d << ',' << format_double(c.step0) << ','
        << format_double(c.tracking.max_rel_dev) << ','
        << format_double(c.tracking.mean_rel_dev) << ','
        << format_double(c.tracking.window_mean_rel_dev) << ','
        << format_double(c.stochastic.records.back().deterministic_obj) << ','
        << format_double(c.deterministic.records.back().deterministic_obj) << '\n';
  }
}

std::string trace_file_stem(double theta, std::size_t d, const char* mode) {
  return "trace_theta" + format_double(theta) + "_d" + std::to_string(d) + "_" + mode;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("DROPFACT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace dropfact
