#include "erl/instances.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace erl {

namespace {

// Tolerates decimal round-off when users pass a boundary value like xi = e^{-2}/4.
constexpr double kBoundarySlack = 1e-12;

bool at_most(double lhs, double rhs) { return lhs <= rhs + kBoundarySlack * std::max(1.0, std::abs(rhs)); }

[[noreturn]] void violated(const std::string& inequality, double lhs, double rhs) {
  std::ostringstream os;
  os.precision(10);
  os << "lower-bound parameters violate " << inequality << " (" << lhs << " vs " << rhs << ")";
  throw ParameterError(os.str());
}

}  // namespace

Regime parse_regime(std::string_view name) {
  if (name == "large_beta" || name == "large") return Regime::large_beta;
  if (name == "small_beta" || name == "small") return Regime::small_beta;
  throw ParameterError("unknown regime '" + std::string(name) + "' (expected large_beta or small_beta)");
}

Bandit parse_bandit(std::string_view name) {
  if (name == "bandit_I" || name == "I") return Bandit::bandit_I;
  if (name == "bandit_II" || name == "II") return Bandit::bandit_II;
  throw ParameterError("unknown bandit '" + std::string(name) + "' (expected bandit_I or bandit_II)");
}

std::string_view to_string(Regime regime) {
  return regime == Regime::large_beta ? "large_beta" : "small_beta";
}

std::string_view to_string(Bandit which) { return which == Bandit::bandit_I ? "bandit_I" : "bandit_II"; }

ArmProbabilities arm_probabilities(const LowerBoundParams& params) {
  const double m = params.beta.magnitude();
  const double H = static_cast<double>(params.horizon);
  const double xi = params.xi;
  if (!(xi > 0.0)) violated("xi > 0", xi, 0.0);

  double u = 0.0;
  if (params.regime == Regime::large_beta) {
    if (params.horizon < 2) violated("H >= 2", H, 2.0);
    if (!at_most(std::log(4.0), m * (H - 1))) violated("|beta|(H-1) >= log 4", m * (H - 1), std::log(4.0));
    u = std::exp(-m * (H - 1));
    if (!at_most(xi, 0.25 * u)) violated("xi <= (1/4) e^{-|beta|(H-1)}", xi, 0.25 * u);
  } else {
    if (params.horizon < 8) violated("H >= 8", H, 8.0);
    if (!at_most(m * (H - 1), std::log(H))) violated("|beta|(H-1) <= log H", m * (H - 1), std::log(H));
    u = 1.0 / H;
    if (!at_most(xi, 1.0 / (4.0 * H))) violated("xi <= 1/(4H)", xi, 1.0 / (4.0 * H));
  }

  const double sign = params.beta.seeking() ? 1.0 : -1.0;
  ArmProbabilities arms;
  arms.p2 = u;
  arms.p1 = arms.q1 = u + sign * xi;
  arms.q2 = u + sign * 2.0 * xi;
  for (double p : {arms.p1, arms.p2, arms.q1, arms.q2})
    if (!(p > 0.0 && p < 1.0)) violated("0 < p1, p2, q1, q2 < 1", p, 1.0);
  return arms;
}

std::array<double, 2> success_probabilities(const LowerBoundParams& params) {
  const ArmProbabilities arms = arm_probabilities(params);
  const bool first = params.which == Bandit::bandit_I;
  std::array<double, 2> p{first ? arms.p1 : arms.q1, first ? arms.p2 : arms.q2};
  if (!params.beta.seeking())
    for (double& x : p) x = 1.0 - x;
  return p;
}

TabularMdp lower_bound_mdp(const LowerBoundParams& params) {
  const auto success = success_probabilities(params);
  constexpr Index s0 = 0, s1 = 1, s2 = 2;
  TabularMdp mdp(3, 2, params.horizon, s0);
  for (Index h = 0; h < params.horizon; ++h) {
    for (Index a = 0; a < 2; ++a) {
      mdp.rewards[h](s1, a) = 1.0;
      auto& P = mdp.transitions[h][a];
      P.setIdentity();
      if (h == 0) {
        P(s0, s0) = 0.0;
        P(s0, s1) = success[a];
        P(s0, s2) = 1.0 - success[a];
      }
    }
  }
  // Step-1 reward at s1 is unreachable (s1 is only entered at step 2).
  require_valid(mdp);
  return mdp;
}

double lower_bound_semi_delta_min(const LowerBoundParams& params) {
  const double b = params.beta.beta();
  const double H = static_cast<double>(params.horizon);
  return std::abs(std::expm1(b * (H - 1))) * params.xi / params.beta.magnitude();
}

std::uint64_t lower_bound_suggested_episodes(const LowerBoundParams& params) {
  const double p2 = arm_probabilities(params).p2;
  return static_cast<std::uint64_t>(std::floor(p2 * (1.0 - p2) / (params.xi * params.xi)));
}

namespace {

// Normalized Exp(1) weights on a random support of size k.
void fill_row(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, Index k, RngStream& rng) {
  const Index S = static_cast<Index>(row.size());
  std::vector<Index> states(S);
  std::iota(states.begin(), states.end(), Index{0});
  for (Index i = 0; i < k; ++i) std::swap(states[i], states[i + rng.uniform_index(S - i)]);
  row.setZero();
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double w = std::max(-std::log1p(-rng.uniform()), 1e-12);
    row(states[i]) = w;
    total += w;
  }
  row /= total;
}

}  // namespace

TabularMdp risk_consistency_mdp(Index states, Index actions, Index horizon, std::uint64_t kernel_seed) {
  if (states < 1 || actions < 1 || horizon < 2)
    throw ParameterError("risk-consistency MDP needs S, A >= 1 and H >= 2");
  RngStream rng(kernel_seed, 0x7263u);
  TabularMdp mdp(states, actions, horizon, 0);
  for (Index h = 0; h < horizon; ++h) {
    mdp.rewards[h].setOnes();
    for (Index s = 0; s < states; ++s)
      for (Index a = 0; a < actions; ++a) fill_row(mdp.transitions[h][a].row(s), states, rng);
  }
  for (Index a = 1; a < actions; ++a) mdp.rewards[horizon - 1].col(a).setZero();
  require_valid(mdp);
  return mdp;
}

TabularMdp random_mdp(std::uint64_t seed, Index states, Index actions, Index horizon,
                      Index support_size) {
  if (states < 1 || actions < 1 || horizon < 1) throw ParameterError("random MDP needs S, A, H >= 1");
  if (support_size < 1 || support_size > states) throw ParameterError("support size must be in [1, S]");
  RngStream rng(seed, 0x6d6470u);
  TabularMdp mdp(states, actions, horizon, 0);
  for (Index h = 0; h < horizon; ++h) {
    for (Index s = 0; s < states; ++s) {
      for (Index a = 0; a < actions; ++a) {
        fill_row(mdp.transitions[h][a].row(s), support_size, rng);
        mdp.rewards[h](s, a) = std::round(rng.uniform() * 1e6) / 1e6;
      }
    }
  }
  require_valid(mdp);
  return mdp;
}

}  // namespace erl
