#include "erl/gaps.hpp"

#include <cmath>
#include <limits>

namespace erl {

Normalizers normalizers(const RiskParams& beta, Index horizon) {
  Normalizers n;
  n.beta = beta.beta();
  n.horizon = horizon;
  n.semi_psi = beta.seeking() ? 1.0 : std::exp(-beta.beta() * static_cast<double>(horizon));
  n.psi = n.semi_psi / beta.beta();
  return n;
}

std::string_view to_string(GapKind kind) {
  switch (kind) {
    case GapKind::cascaded: return "cascaded";
    case GapKind::semi_normalized: return "semi_normalized";
    case GapKind::risk_neutral: return "risk_neutral";
    case GapKind::alternative: return "alternative";
    case GapKind::controlled: return "controlled";
    case GapKind::optimism: return "optimism";
  }
  return "unknown";
}

std::string_view to_string(Reachability mode) {
  return mode == Reachability::reachable_only ? "reachable_only" : "unconstrained";
}

namespace {

double semi_psi_of(double beta, Index horizon) {
  return beta > 0 ? 1.0 : std::exp(-beta * static_cast<double>(horizon));
}

// e^{beta V*_h(s)} - e^{beta Q*_h(s,a)}, taken from the shifted tables.
double bracket(const RiskValueTables& t, Index h, Index s, Index a) {
  return t.shifted_V(h, s) - t.shifted_Q[h](s, a);
}

void check_location(const RiskValueTables& t, Index h, Index s, Index a) {
  if (h >= t.horizon() || s >= static_cast<Index>(t.shifted_Q[h].rows()) ||
      a >= static_cast<Index>(t.shifted_Q[h].cols()))
    throw std::out_of_range("gap location out of range");
}

}  // namespace

GapValue semi_normalized_gap(const RiskValueTables& optimal, Index h, Index s, Index a,
                             double prefix_reward) {
  check_location(optimal, h, s, a);
  const double b = optimal.beta;
  return {std::exp(b * prefix_reward) * bracket(optimal, h, s, a) / b, GapKind::semi_normalized,
          {h, s, a}, prefix_reward};
}

GapValue cascaded_gap(const RiskValueTables& optimal, Index h, Index s, Index a, double prefix_reward) {
  GapValue g = semi_normalized_gap(optimal, h, s, a, prefix_reward);
  g.value *= semi_psi_of(optimal.beta, optimal.horizon());
  g.kind = GapKind::cascaded;
  return g;
}

GapValue risk_neutral_gap(const RiskNeutralTables& neutral, Index h, Index s, Index a) {
  if (h >= neutral.Q.size()) throw std::out_of_range("gap location out of range");
  return {neutral.V(h, s) - neutral.Q[h](s, a), GapKind::risk_neutral, {h, s, a}, 0.0};
}

GapValue alternative_gap(const RiskValueTables& optimal, Index h, Index s, Index a, double prefix_reward) {
  check_location(optimal, h, s, a);
  const double b = optimal.beta;
  const double sign = b > 0 ? 1.0 : -1.0;
  return {sign * std::exp(b * prefix_reward) * bracket(optimal, h, s, a), GapKind::alternative,
          {h, s, a}, prefix_reward};
}

GapValue controlled_gap(const RiskValueTables& optimal, const RiskValueTables& pi_eval, Index h,
                        Index s, Index a, double prefix_reward) {
  check_location(optimal, h, s, a);
  const double b = optimal.beta;
  const double diff = optimal.shifted_V(h, s) - pi_eval.shifted_Q[h](s, a);
  return {semi_psi_of(b, optimal.horizon()) * std::exp(b * prefix_reward) * diff / b,
          GapKind::controlled, {h, s, a}, prefix_reward};
}

GapValue optimism_gap(const RiskValueTables& optimal, double estimate_exp_q, Index h, Index s,
                      Index a, double prefix_reward) {
  check_location(optimal, h, s, a);
  const double b = optimal.beta;
  const double diff = estimate_exp_q - optimal.exp_V(h, s);
  return {semi_psi_of(b, optimal.horizon()) * std::exp(b * prefix_reward) * diff / b,
          GapKind::optimism, {h, s, a}, prefix_reward};
}

namespace {

/// The prefix reward minimizing e^{beta R} at (h, s), or nullopt when the
/// cell is excluded (unreachable in reachable_only mode).
std::optional<double> extremal_prefix_reward(const PrefixRewardBounds& bounds, double beta, Index h,
                                             Index s, Reachability mode) {
  if (mode == Reachability::unconstrained) return beta > 0 ? 0.0 : static_cast<double>(h);
  if (!bounds.reachable(h, s)) return std::nullopt;
  return beta > 0 ? bounds.min_reward(h, s) : bounds.max_reward(h, s);
}

}  // namespace

MinimalGapReport minimal_gap(const TabularMdp& mdp, const RiskValueTables& optimal,
                             Reachability mode, double zero_tolerance) {
  const PrefixRewardBounds bounds = reachable_prefix_reward_bounds(mdp);
  const double b = optimal.beta;
  MinimalGapReport report;
  report.mode = mode;
  report.zero_tolerance = zero_tolerance;
  report.semi_delta_min = std::numeric_limits<double>::infinity();
  bool found = false;
  for (Index h = 0; h < mdp.horizon; ++h) {
    for (Index s = 0; s < mdp.num_states; ++s) {
      const auto prefix = extremal_prefix_reward(bounds, b, h, s, mode);
      if (!prefix) continue;
      for (Index a = 0; a < mdp.num_actions; ++a) {
        if (semi_normalized_gap(optimal, h, s, a, 0.0).value <= zero_tolerance) continue;
        const double gap = semi_normalized_gap(optimal, h, s, a, *prefix).value;
        if (gap < report.semi_delta_min) {
          report.semi_delta_min = gap;
          report.witness = {h, s, a};
          report.witness_prefix_reward = *prefix;
          found = true;
        }
      }
    }
  }
  if (!found) throw NoNonzeroGap("no nonzero cascaded gap: every action is optimal at every location");
  report.delta_min = semi_psi_of(b, mdp.horizon) * report.semi_delta_min;
  return report;
}

double bellman_difference_residual(const TabularMdp& mdp, const RiskValueTables& optimal,
                                   const MarkovPolicy& pi, const RiskValueTables& pi_eval, Index h,
                                   Index s, double prefix_reward) {
  const double b = optimal.beta;
  const double semi_psi = semi_psi_of(b, mdp.horizon);
  auto D = [&](Index step, Index state, double reward) {
    if (step == mdp.horizon) return 0.0;
    return semi_psi * std::exp(b * reward) *
           (optimal.shifted_V(step, state) - pi_eval.shifted_V(step, state)) / b;
  };
  const Index a = pi(h, s);
  const double gap = cascaded_gap(optimal, h, s, a, prefix_reward).value;
  const double next_reward = prefix_reward + mdp.reward(h, s, a);
  double expected_next = 0.0;
  for (Index n = 0; n < mdp.num_states; ++n)
    expected_next += mdp.prob(h, s, a, n) * D(h + 1, n, next_reward);
  return D(h, s, prefix_reward) - gap - expected_next;
}

double risk_neutral_bellman_difference_residual(const TabularMdp& mdp,
                                                const RiskNeutralTables& optimal,
                                                const MarkovPolicy& pi,
                                                const RiskNeutralTables& pi_eval, Index h, Index s) {
  const Index a = pi(h, s);
  const double gap = risk_neutral_gap(optimal, h, s, a).value;
  double expected_next = 0.0;
  for (Index n = 0; n < mdp.num_states; ++n)
    expected_next += mdp.prob(h, s, a, n) * (optimal.V(h + 1, n) - pi_eval.V(h + 1, n));
  return (optimal.V(h, s) - pi_eval.V(h, s)) - gap - expected_next;
}

ExpRegretDecomposition decompose_exponential_regret(const TabularMdp& mdp,
                                                    const RiskValueTables& optimal,
                                                    const MarkovPolicy& pi) {
  const double b = optimal.beta;
  const RiskValueTables pi_eval = evaluate_policy(mdp, pi, RiskParams(b));
  const Index s1 = mdp.initial_state;

  ExpRegretDecomposition out;
  out.exponential_regret = (optimal.shifted_V(0, s1) - pi_eval.shifted_V(0, s1)) / b;

  Eigen::VectorXd weight = Eigen::VectorXd::Zero(mdp.num_states);
  weight(s1) = 1.0;
  for (Index h = 0; h < mdp.horizon; ++h) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(mdp.num_states);
    for (Index s = 0; s < mdp.num_states; ++s) {
      if (weight(s) == 0.0) continue;
      const Index a = pi(h, s);
      out.gap_expectation += weight(s) * bracket(optimal, h, s, a) / b;
      next += weight(s) * std::exp(b * mdp.reward(h, s, a)) *
              mdp.transitions[h][a].row(s).transpose();
    }
    weight = std::move(next);
  }
  return out;
}

double decomposition_residual(const TabularMdp& mdp, const RiskValueTables& optimal,
                              const MarkovPolicy& pi) {
  return decompose_exponential_regret(mdp, optimal, pi).residual();
}

GapReport gap_report(const TabularMdp& mdp, const RiskParams& beta, Reachability mode,
                     double zero_tolerance) {
  const OptimalSolution solution = solve_optimal(mdp, beta);
  const RiskNeutralTables neutral = solve_risk_neutral(mdp);
  const PrefixRewardBounds bounds = reachable_prefix_reward_bounds(mdp);
  const double b = beta.beta();

  GapReport report;
  report.norm = normalizers(beta, mdp.horizon);
  report.mode = mode;
  report.zero_tolerance = zero_tolerance;
  report.scale_reference = std::expm1(beta.magnitude() * static_cast<double>(mdp.horizon)) / beta.magnitude();
  for (Index h = 0; h < mdp.horizon; ++h) {
    for (Index s = 0; s < mdp.num_states; ++s) {
      const bool reachable = bounds.reachable(h, s);
      const double prefix = extremal_prefix_reward(bounds, b, h, s, Reachability::unconstrained).value();
      const double used = (mode == Reachability::reachable_only && reachable)
                              ? extremal_prefix_reward(bounds, b, h, s, mode).value()
                              : prefix;
      for (Index a = 0; a < mdp.num_actions; ++a) {
        LocationGaps g;
        g.location = {h, s, a};
        g.reachable = reachable;
        g.extremal_prefix_reward = used;
        g.semi_normalized = semi_normalized_gap(solution.values, h, s, a, used).value;
        g.cascaded = report.norm.semi_psi * g.semi_normalized;
        g.risk_neutral = risk_neutral_gap(neutral, h, s, a).value;
        report.locations.push_back(g);
      }
    }
  }
  try {
    report.minimal = minimal_gap(mdp, solution.values, mode, zero_tolerance);
  } catch (const NoNonzeroGap&) {
    report.minimal.reset();
  }
  return report;
}

nlohmann::json to_json(const GapReport& report) {
  using nlohmann::json;
  json locations = json::array();
  for (const auto& g : report.locations) {
    locations.push_back({{"h", g.location.h + 1},
                         {"s", g.location.s},
                         {"a", g.location.a},
                         {"reachable", g.reachable},
                         {"prefix_reward", g.extremal_prefix_reward},
                         {"semi_normalized", g.semi_normalized},
                         {"cascaded", g.cascaded},
                         {"risk_neutral", g.risk_neutral}});
  }
  json out{{"beta", report.norm.beta},
           {"H", report.norm.horizon},
           {"psi", report.norm.psi},
           {"semi_psi", report.norm.semi_psi},
           {"mode", to_string(report.mode)},
           {"zero_tolerance", report.zero_tolerance},
           {"scale_reference", report.scale_reference},
           {"locations", std::move(locations)}};
  if (report.minimal) {
    const auto& m = *report.minimal;
    out["delta_min"] = m.delta_min;
    out["semi_delta_min"] = m.semi_delta_min;
    out["witness"] = {{"h", m.witness.h + 1},
                      {"s", m.witness.s},
                      {"a", m.witness.a},
                      {"prefix_reward", m.witness_prefix_reward}};
  } else {
    out["delta_min"] = nullptr;
    out["error"] = "no nonzero gap";
  }
  return out;
}

}  // namespace erl
