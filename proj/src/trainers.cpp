#include "dropfact/trainers.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

#include "dropfact/kernels.hpp"

namespace dropfact {
namespace {

void require_compatible(const DenseMatrix& x, const FactorPair& f) {
  if (x.rows() != f.rows_u() || x.cols() != f.rows_v()) {
    throw DimensionError("data is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         " but factors give " + std::to_string(f.rows_u()) + "x" +
                         std::to_string(f.rows_v()));
  }
}

// R = X - sum_k coeff[k] u_k v_k^T, built row by row from V^T so that every
// inner loop runs over a contiguous row of length n.
DenseMatrix residual(const DenseMatrix& x, const DenseMatrix& u, const DenseMatrix& vt,
                     const std::vector<double>& coeff) {
  DenseMatrix r = x;
  const std::size_t d = u.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto ri = r.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      if (coeff[k] == 0.0) continue;
      const double a = u(i, k) * coeff[k];
      if (a != 0.0) kernels::axpy(-a, vt.row(k), ri);
    }
  }
  return r;
}

// (R V)_{ik} for the columns with active[k]; other entries left zero.
DenseMatrix residual_times_v(const DenseMatrix& r, const DenseMatrix& vt,
                             const std::vector<bool>& active) {
  DenseMatrix out(r.rows(), vt.rows());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const auto ri = r.row(i);
    for (std::size_t k = 0; k < vt.rows(); ++k)
      if (active[k]) out(i, k) = kernels::dot(ri, vt.row(k));
  }
  return out;
}

// (R^T U)^T, i.e. row k holds sum_i U_{ik} R_{i,:}, for the active columns.
DenseMatrix residual_t_times_u_transposed(const DenseMatrix& r, const DenseMatrix& u,
                                          const std::vector<bool>& active) {
  DenseMatrix out(u.cols(), r.cols());
  for (std::size_t k = 0; k < u.cols(); ++k) {
    if (!active[k]) continue;
    auto ok = out.row(k);
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const double a = u(i, k);
      if (a != 0.0) kernels::axpy(a, r.row(i), ok);
    }
  }
  return out;
}

void guard(double value, std::size_t iter, const char* what) {
  if (!std::isfinite(value) || value > kDivergenceLimit) {
    std::ostringstream msg;
    msg << "training diverged at iteration " << iter << ": " << what << " = " << value
        << " (limit " << kDivergenceLimit << "); reduce step0";
    throw DivergenceError(msg.str());
  }
}

double norm_or_one(const DenseMatrix& x) {
  const double nx = frobenius_norm(x);
  return nx > 0.0 ? nx : 1.0;
}

}  // namespace

StepSchedule::StepSchedule(double step0_, double tau_) : step0(step0_), tau(tau_) {
  if (!(step0 > 0.0 && std::isfinite(step0))) throw ParameterError("step0 must be positive");
  if (!(tau > 0.0 && std::isfinite(tau))) throw ParameterError("step tau must be positive");
}

FactorPair sgd_dropout_step(const DenseMatrix& x, const FactorPair& f, const BernoulliMask& mask,
                            double theta, double step) {
  require_open_unit(theta, "theta");
  require_compatible(x, f);
  const std::size_t d = f.width();
  if (mask.size() != d) throw DimensionError("mask length does not match factor width");

  std::vector<double> coeff(d);
  std::vector<bool> active(d);
  for (std::size_t k = 0; k < d; ++k) {
    active[k] = mask[k];
    coeff[k] = mask[k] ? 1.0 / theta : 0.0;
  }
  const DenseMatrix vt = f.v().transposed();
  const DenseMatrix r = residual(x, f.u(), vt, coeff);
  const DenseMatrix rv = residual_times_v(r, vt, active);
  const DenseMatrix rtu_t = residual_t_times_u_transposed(r, f.u(), active);

  FactorPair out = f;
  const double scale = 2.0 * step / theta;
  for (std::size_t i = 0; i < out.rows_u(); ++i)
    for (std::size_t k = 0; k < d; ++k)
      if (active[k]) out.u()(i, k) += scale * rv(i, k);
  for (std::size_t j = 0; j < out.rows_v(); ++j)
    for (std::size_t k = 0; k < d; ++k)
      if (active[k]) out.v()(j, k) += scale * rtu_t(k, j);
  return out;
}

FactorGradient grad_deterministic(const DenseMatrix& x, const FactorPair& f, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
  require_compatible(x, f);
  const std::size_t d = f.width();
  const std::vector<double> ones(d, 1.0);
  const std::vector<bool> all(d, true);
  const DenseMatrix vt = f.v().transposed();
  const DenseMatrix r = residual(x, f.u(), vt, ones);
  const DenseMatrix rv = residual_times_v(r, vt, all);
  const DenseMatrix rtu_t = residual_t_times_u_transposed(r, f.u(), all);
  const auto cu = column_norms_squared(f.u());
  const auto cv = column_norms_squared(f.v());

  DenseMatrix gu(f.rows_u(), d);
  DenseMatrix gv(f.rows_v(), d);
  for (std::size_t i = 0; i < f.rows_u(); ++i)
    for (std::size_t k = 0; k < d; ++k)
      gu(i, k) = -2.0 * rv(i, k) + 2.0 * lambda * f.u()(i, k) * cv[k];
  for (std::size_t j = 0; j < f.rows_v(); ++j)
    for (std::size_t k = 0; k < d; ++k)
      gv(j, k) = -2.0 * rtu_t(k, j) + 2.0 * lambda * f.v()(j, k) * cu[k];
  return {std::move(gu), std::move(gv)};
}

FactorPair init_factors(std::size_t m, std::size_t n, std::size_t d, Rng& rng) {
  DenseMatrix u(m, d);
  DenseMatrix v(n, d);
  for (double& e : u.data()) e = rng.normal(0.0, kInitStddev);
  for (double& e : v.data()) e = rng.normal(0.0, kInitStddev);
  return {std::move(u), std::move(v)};
}

double default_stochastic_step0(const DenseMatrix& x, double theta) {
  require_open_unit(theta, "theta");
  return 0.5 * theta * theta / norm_or_one(x);
}

double default_deterministic_step0(const DenseMatrix& x, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
  return 0.5 / ((1.0 + lambda) * norm_or_one(x));
}

TrainTrace train_stochastic(const DenseMatrix& x, std::size_t d, const DropoutConfig& config) {
  config.validate();
  if (d == 0) throw ParameterError("factor width d must be at least 1");
  const double theta = config.retain_prob(d);
  const StepSchedule schedule(config.step0.value_or(default_stochastic_step0(x, theta)),
                              config.step_tau);

  Rng rng(config.seed);
  FactorPair f = init_factors(x.rows(), x.cols(), d, rng);
  std::vector<TraceRecord> records;
  records.reserve(config.iterations);
  double ema = 0.0;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    const double step = schedule(t);
    const auto mask = BernoulliMask::sample(d, theta, rng);
    const double sampled = masked_objective(x, f, mask, theta);
    const double det = deterministic_objective(x, f, theta);
    guard(sampled, t, "sampled objective");
    guard(det, t, "deterministic objective");
    ema = t == 0 ? sampled : kEmaDecay * ema + (1.0 - kEmaDecay) * sampled;
    records.push_back({t, sampled, det, ema, step});
    f = sgd_dropout_step(x, f, mask, theta, step);
  }
  return {std::move(records), std::move(f)};
}

TrainTrace train_deterministic(const DenseMatrix& x, std::size_t d, double lambda,
                               const DropoutConfig& config) {
  config.validate();
  if (d == 0) throw ParameterError("factor width d must be at least 1");
  if (!(lambda >= 0.0 && std::isfinite(lambda))) {
    throw ParameterError("lambda must be a nonnegative finite number");
  }
  const StepSchedule schedule(config.step0.value_or(default_deterministic_step0(x, lambda)),
                              config.step_tau);

  Rng rng(config.seed);
  FactorPair f = init_factors(x.rows(), x.cols(), d, rng);
  std::vector<TraceRecord> records;
  records.reserve(config.iterations);
  double ema = 0.0;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    const double step = schedule(t);
    const double det = regularized_objective(x, f, lambda);
    guard(det, t, "objective");
    ema = t == 0 ? det : kEmaDecay * ema + (1.0 - kEmaDecay) * det;
    records.push_back({t, std::nullopt, det, ema, step});
    const auto g = grad_deterministic(x, f, lambda);
    auto ud = f.u().data();
    auto vd = f.v().data();
    kernels::axpy(-step, g.gu.data(), ud);
    kernels::axpy(-step, g.gv.data(), vd);
  }
  return {std::move(records), std::move(f)};
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "iter,stochastic_obj,deterministic_obj,ema_obj,step\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',';
    if (r.stochastic_obj) out << format_double(*r.stochastic_obj);
    out << ',' << format_double(r.deterministic_obj) << ',' << format_double(r.ema_obj) << ','
        << format_double(r.step) << '\n';
  }
}

}  // namespace dropfact
