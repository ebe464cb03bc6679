#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dropfact {

struct SuiteResult {
  std::string name;
  bool passed;
  double max_error;
  double tolerance;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 0x5eedULL;
  /// Relative perturbation applied to Omega inside the suites (negative control).
  double omega_fault = 0.0;
};

/// Built-in verification suites: the mask-enumeration identity, finite
/// difference gradients, l1-squared prox stationarity, quasi-norm axioms,
/// SVD invariants and SIMD/scalar kernel agreement.
std::vector<SuiteResult> run_checks(const CheckOptions& options);

}  // namespace dropfact
