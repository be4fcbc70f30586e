#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dml/linalg.hpp"

namespace dml {

struct GradCheckResult {
  std::string component;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  // Analytic-gradient magnitude below which a coordinate is skipped
  // (relative error is meaningless near zero).
  double magnitude_floor = 1e-8;
  // Test hook: offset added to one analytic gradient coordinate so the
  // harness's own sensitivity can be verified.
  double perturbation = 0.0;
  // Empty = all components; otherwise a subset of
  // {contrastive, triplet, npair, density, network, joint}.
  std::vector<std::string> components;
};

// Central finite-difference suites for every analytic gradient in the
// engine: the three losses, the density regularizer (w.r.t. embeddings
// and alpha), the network backward pass, and the full joint objective
// through the network for each loss.
std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& options);

bool all_passed(const std::vector<GradCheckResult>& results);

}  // namespace dml
