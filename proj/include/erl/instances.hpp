#pragma once

#include "erl/risk_values.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace erl {

enum class Regime { large_beta, small_beta };
enum class Bandit { bandit_I, bandit_II };

/// "large_beta" | "small_beta"; throws ParameterError otherwise.
Regime parse_regime(std::string_view name);
/// "bandit_I" | "bandit_II" (also "I" / "II").
Bandit parse_bandit(std::string_view name);
std::string_view to_string(Regime regime);
std::string_view to_string(Bandit which);

/// Two-armed hard instance embedded in a 3-state MDP (s0 initial, s1 absorbing
/// with unit rewards, s2 absorbing with zero rewards).
struct LowerBoundParams {
  RiskParams beta{1.0};
  Index horizon = 2;
  Regime regime = Regime::large_beta;
  double xi = 0.0;
  Bandit which = Bandit::bandit_I;
};

/// Arm parameters: p2 = u, p1 = q1 = p2 +/- xi, q2 = p2 +/- 2 xi, with the
/// sign negative for beta < 0.
struct ArmProbabilities {
  double p1 = 0, p2 = 0, q1 = 0, q2 = 0;
};

/// Throws ParameterError naming the violated inequality.
ArmProbabilities arm_probabilities(const LowerBoundParams& params);

/// Probability of moving s0 -> s1 under each arm (index 0 and 1).
std::array<double, 2> success_probabilities(const LowerBoundParams& params);

TabularMdp lower_bound_mdp(const LowerBoundParams& params);

/// Semi-normalized minimal gap of the hard instance:
/// (1/|beta|) |e^{beta (H-1)} - 1| xi.
double lower_bound_semi_delta_min(const LowerBoundParams& params);

/// Suggested episode count floor(p2 (1 - p2) / xi^2). Not enforced anywhere.
std::uint64_t lower_bound_suggested_episodes(const LowerBoundParams& params);

/// Seeded stochastic kernels, all rewards 1 except r_H(s, a) = 0 for a != 0.
TabularMdp risk_consistency_mdp(Index states, Index actions, Index horizon, std::uint64_t kernel_seed);

/// Rows are normalized Exp(1) weights on a seeded support of the given size;
/// rewards uniform in [0, 1] quantized to 1e-6.
TabularMdp random_mdp(std::uint64_t seed, Index states, Index actions, Index horizon,
                      Index support_size);

}  // namespace erl
