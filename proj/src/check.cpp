#include "erl/check.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace erl {

MarkovPolicy random_policy(Index H, Index S, Index A, RngStream& rng) {
  MarkovPolicy pi(H, S);
  for (Index h = 0; h < H; ++h)
    for (Index s = 0; s < S; ++s) pi.at(h, s) = rng.uniform_index(A);
  return pi;
}

namespace {

std::string where(Index h, Index s, std::optional<Index> a = std::nullopt) {
  std::ostringstream os;
  os << "(h=" << h + 1 << ", s=" << s;
  if (a) os << ", a=" << *a;
  os << ')';
  return os.str();
}

void record(CheckResult& r, double value, const std::string& location) {
  if (value > r.worst) {
    r.worst = value;
    if (value > r.tolerance) {
      r.passed = false;
      r.detail = location;
    }
  }
}

}  // namespace

std::vector<CheckResult> run_checks(const TabularMdp& mdp, const RiskParams& beta,
                                    const CheckOptions& opts) {
  require_valid(mdp);
  const Index S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  RngStream rng(opts.seed, 0x636b);

  const OptimalSolution optimal = solve_optimal(mdp, beta);
  const RiskNeutralTables neutral = solve_risk_neutral(mdp);

  std::vector<MarkovPolicy> policies{optimal.policy};
  for (Index i = 0; i < opts.random_policies; ++i) policies.push_back(random_policy(H, S, A, rng));

  CheckResult oracle{"oracle_equivalence", true, false, 0.0, opts.oracle_tolerance, ""};
  CheckResult cond{"bellman_difference_residual", true, false, 0.0, opts.residual_tolerance, ""};
  CheckResult neutral_cond{"risk_neutral_bellman_difference_residual", true, false, 0.0,
                           opts.residual_tolerance, ""};
  CheckResult decomposition{"decomposition_residual", true, false, 0.0, opts.residual_tolerance, ""};
  CheckResult nonneg{"gap_nonnegativity", true, false, 0.0, opts.nonnegativity_slack, ""};

  const bool enumerable = std::pow(static_cast<double>(S), static_cast<double>(H)) <= kEnumerationGuard;
  if (!enumerable) {
    oracle.skipped = true;
    decomposition.skipped = true;
    oracle.detail = decomposition.detail = "S^H exceeds the enumeration guard";
  }

  for (std::size_t p = 0; p < policies.size(); ++p) {
    const MarkovPolicy& pi = policies[p];
    const RiskValueTables eval = evaluate_policy(mdp, pi, beta);
    const RiskNeutralTables neutral_eval = solve_risk_neutral(mdp, pi);
    const std::string tag = "policy " + std::to_string(p) + " ";

    if (enumerable) {
      const double dp = eval.V(0, mdp.initial_state);
      const double bf = brute_force_value(mdp, pi, beta);
      const double diff = std::abs(dp - bf);
      record(oracle, diff == 0.0 ? 0.0 : diff / std::max(std::abs(bf), std::numeric_limits<double>::min()),
             tag + where(0, mdp.initial_state));
      const double res = std::abs(decomposition_residual(mdp, optimal.values, pi));
      record(decomposition, res, tag + where(0, mdp.initial_state));
    }

    const Index samples = std::max<Index>(1, opts.residual_samples / policies.size());
    for (Index i = 0; i < samples; ++i) {
      const Index h = rng.uniform_index(H);
      const Index s = rng.uniform_index(S);
      const double prefix = rng.uniform() * static_cast<double>(h);
      record(cond, std::abs(bellman_difference_residual(mdp, optimal.values, pi, eval, h, s, prefix)),
             tag + where(h, s));
      record(neutral_cond,
             std::abs(risk_neutral_bellman_difference_residual(mdp, neutral, pi, neutral_eval, h, s)),
             tag + where(h, s));
    }
  }

  const Normalizers norm = normalizers(beta, H);
  const double scale = std::max(1.0, std::expm1(beta.magnitude() * static_cast<double>(H)) / beta.magnitude());
  for (Index h = 0; h < H; ++h)
    for (Index s = 0; s < S; ++s)
      for (Index a = 0; a < A; ++a) {
        for (double prefix : {0.0, static_cast<double>(h)}) {
          const double g = cascaded_gap(optimal.values, h, s, a, prefix).value / norm.semi_psi;
          record(nonneg, -g / scale, where(h, s, a));
        }
        record(nonneg, -risk_neutral_gap(neutral, h, s, a).value / std::max(1.0, static_cast<double>(H)),
               where(h, s, a) + " risk-neutral");
      }

  return {oracle, cond, neutral_cond, decomposition, nonneg};
}

}  // namespace erl
