#include "dropfact/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "dropfact/errors.hpp"

namespace dropfact::kernels {
namespace {

// Reference kernels: plain left-to-right loops, no reassociation.

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void rot_scalar(double* x, double* y, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi + s * yi;
    y[i] = c * yi - s * xi;
  }
}

constexpr KernelTable kScalar{Isa::scalar, dot_scalar, sum_squares_scalar, axpy_scalar,
                              rot_scalar};

bool cpu_has_avx2() noexcept {
#if defined(DROPFACT_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("DROPFACT_KERNELS")) {
    const std::string_view v(env);
    if (v == "scalar") return &kScalar;
#if defined(DROPFACT_HAVE_AVX2)
    if (v == "avx2" && cpu_has_avx2()) return &detail::avx2_table();
#endif
  }
#if defined(DROPFACT_HAVE_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_table();
#endif
  return &kScalar;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("kernel operands differ in length: " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() noexcept { return kScalar; }
}  // namespace detail

std::string_view name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "avx2") return Isa::avx2;
  throw ParameterError("unknown kernel variant '" + std::string(text) + "'");
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa best_supported() noexcept { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const KernelTable& table(Isa isa) {
  if (!supported(isa)) {
    throw ParameterError("kernel variant '" + std::string(name(isa)) +
                         "' is not supported on this CPU");
  }
#if defined(DROPFACT_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_table();
#endif
  return kScalar;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

Isa active_isa() noexcept { return active().isa; }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

double dot(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size());
  return active().dot(x.data(), y.data(), x.size());
}

double sum_squares(std::span<const double> x) { return active().sum_squares(x.data(), x.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_length(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void rot(std::span<double> x, std::span<double> y, double c, double s) {
  require_same_length(x.size(), y.size());
  active().rot(x.data(), y.data(), x.size(), c, s);
}

}  // namespace dropfact::kernels
