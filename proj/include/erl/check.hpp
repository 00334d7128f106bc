#pragma once

#include "erl/gaps.hpp"

#include <string>
#include <vector>

namespace erl {

struct CheckOptions {
  std::uint64_t seed = 0;
  Index random_policies = 3;
  Index residual_samples = 100;
  double oracle_tolerance = 1e-10;     // relative
  double residual_tolerance = 1e-9;    // absolute
  double nonnegativity_slack = 1e-12;  // relative to the gap scale
};

struct CheckResult {
  std::string name;
  bool passed = true;
  bool skipped = false;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;  // offending location on failure, reason when skipped
};

/// Invariant battery on one MDP: oracle equivalence, risk-sensitive and
/// risk-neutral Bellman-difference residuals, the exponential-regret
/// decomposition and gap nonnegativity. Policies and prefix rewards are drawn
/// from RngStream(seed, 0x636b).
std::vector<CheckResult> run_checks(const TabularMdp& mdp, const RiskParams& beta,
                                    const CheckOptions& opts = {});

inline bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

MarkovPolicy random_policy(Index H, Index S, Index A, RngStream& rng);

}  // namespace erl
