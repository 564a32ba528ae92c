#pragma once

// Finite-difference gradient checks, built against the double-precision
// engine so that central differences resolve 1e-4 relative error.

#include <cstdint>
#include <string>
#include <vector>

namespace sgc::testing {

struct GradCheckResult {
  std::string name;
  std::size_t coordinates = 0;  // scalars checked
  std::size_t kinks = 0;        // coordinates resolved by one-sided differences
  double max_abs_error = 0.0;   // smooth coordinates only
  double max_rel_error = 0.0;   // over coordinates outside the absolute floor
  bool pass = true;
  std::string detail;           // first failing coordinate
};

inline constexpr double kGradRelTol = 1e-4;
inline constexpr double kGradAbsFloor = 1e-6;
inline constexpr double kGradStep = 1e-3;

/// Every differentiable primitive, on random instances of at most 6 rows and
/// 8 columns.
std::vector<GradCheckResult> check_primitives(std::uint64_t seed);
/// Linear, GRU, message passing (linear and MLP), gate, gather, FC stack.
std::vector<GradCheckResult> check_layers(std::uint64_t seed);
/// Loss summed over a two-molecule batch for every model mode.
std::vector<GradCheckResult> check_models(std::uint64_t seed);

/// Sanity check of the checker: a deliberately wrong backward rule must fail.
bool checker_detects_wrong_gradient();

}  // namespace sgc::testing
