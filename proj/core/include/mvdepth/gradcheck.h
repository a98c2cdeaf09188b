#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mvdepth {

inline constexpr double kGradientTolerance = 1e-4;

struct GradientCheckResult {
  std::string family;  // e.g. "lie.action_jacobian"
  double max_rel_error = 0.0;
  int trials = 0;
  bool passed() const { return max_rel_error < kGradientTolerance; }
};

std::vector<std::string> gradient_families();

struct GradientCheckOptions {
  // Module prefixes ("camera") or full family names; empty runs everything.
  std::vector<std::string> families;
  int trials = 50;
  uint64_t seed = 0;
  // Negates the analytic side of one family; used to prove the checks bite.
  std::string inject_fault;
};

// Analytic vs central finite differences. Per trial the error is
// max|A - N| / max(max|A|, max|N|, 1e-8). Throws kInvalidParams when the
// filter matches no family.
std::vector<GradientCheckResult> run_gradient_checks(const GradientCheckOptions& options);

}  // namespace mvdepth
