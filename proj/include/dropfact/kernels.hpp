#pragma once

// Data-parallel inner loops shared by the trainers and the linear-algebra
// routines. Each kernel has a scalar reference implementation and, where the
// CPU supports it, an AVX2+FMA variant. The variant is chosen once at startup
// (overridable with DROPFACT_KERNELS=scalar|avx2 or kernels::select) and is
// equivalence-tested against the reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace dropfact::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// Plane rotation: (x, y) <- (c x + s y, c y - s x)
  void (*rot)(double* x, double* y, std::size_t n, double c, double s);
};

std::string_view name(Isa isa) noexcept;
/// Parses "scalar" / "avx2"; throws ParameterError otherwise.
Isa parse_isa(std::string_view text);

bool supported(Isa isa) noexcept;
/// Best variant the running CPU supports.
Isa best_supported() noexcept;

/// Table for a specific variant; throws ParameterError when unsupported.
const KernelTable& table(Isa isa);
/// Currently selected table.
const KernelTable& active() noexcept;
Isa active_isa() noexcept;
/// Switch the process-wide selection; throws ParameterError when unsupported.
void select(Isa isa);

// Span front-ends dispatching through active(). Lengths must agree.
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void rot(std::span<double> x, std::span<double> y, double c, double s);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(DROPFACT_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace dropfact::kernels
