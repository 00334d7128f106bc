#include "erl/risk_values.hpp"

#include <cmath>
#include <sstream>

namespace erl {

RiskParams::RiskParams(double beta) : beta_(beta) {
  if (!std::isfinite(beta) || beta == 0.0)
    throw ParameterError("beta must be a finite nonzero real (use the risk-neutral solver for beta = 0)");
  const double m = std::abs(beta);
  if (m < kMinMagnitude || m > kMaxMagnitude) {
    std::ostringstream os;
    os << "|beta| = " << m << " outside [" << kMinMagnitude << ", " << kMaxMagnitude << "]";
    throw ParameterError(os.str());
  }
}

void require_exponent_budget(const RiskParams& beta, Index horizon, const SolverOptions& opts) {
  const double exponent = beta.magnitude() * static_cast<double>(horizon);
  if (exponent > opts.exponent_budget) {
    std::ostringstream os;
    os << "|beta| * H = " << exponent << " exceeds the exponent budget " << opts.exponent_budget;
    throw ParameterError(os.str());
  }
}

namespace {

Eigen::MatrixXd log_view(const Eigen::MatrixXd& shifted, double beta) {
  return shifted.unaryExpr([beta](double u) { return std::log1p(u) / beta; });
}

/// sum_s' P(s'|s) - 1 for every row, summed in long double. Row round-off of
/// order 1e-16 would otherwise reach V as 1e-16 / |beta|.
Eigen::ArrayXd mass_defect(const Eigen::MatrixXd& P) {
  Eigen::ArrayXd out(P.rows());
  for (Eigen::Index s = 0; s < P.rows(); ++s) {
    long double sum = 0.0L;
    for (Eigen::Index n = 0; n < P.cols(); ++n) sum += P(s, n);
    out(s) = static_cast<double>(sum - 1.0L);
  }
  return out;
}

/// Backward induction in the shifted exponential domain u = e^{beta v} - 1:
///   u_Q(s,a) = expm1(beta r) + e^{beta r} * ((sum_s' P - 1) + sum_s' P u_V'(s'))
/// `choose(h, s, row)` returns the action whose value becomes V_h(s).
template <typename Choose>
RiskValueTables backward_induction(const TabularMdp& mdp, double beta, Choose&& choose) {
  const Index S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  RiskValueTables out;
  out.beta = beta;
  out.shifted_V = Eigen::MatrixXd::Zero(H + 1, S);
  out.shifted_Q.assign(H, Eigen::MatrixXd::Zero(S, A));

  for (Index h = H; h-- > 0;) {
    const Eigen::VectorXd next = out.shifted_V.row(h + 1).transpose();
    Eigen::MatrixXd& uq = out.shifted_Q[h];
    for (Index a = 0; a < A; ++a) {
      const Eigen::MatrixXd& P = mdp.transitions[h][a];
      const Eigen::ArrayXd scaled = beta * mdp.rewards[h].col(a).array();
      const Eigen::ArrayXd continuation = mass_defect(P) + (P * next).array();
      uq.col(a) = scaled.unaryExpr([](double x) { return std::expm1(x); }) +
                  scaled.exp() * continuation;
    }
    for (Index s = 0; s < S; ++s) {
      const Index a = choose(h, s, uq.row(s));
      out.shifted_V(h, s) = uq(s, a);
    }
  }

  out.V = log_view(out.shifted_V, beta);
  out.exp_V = out.shifted_V.array() + 1.0;
  out.Q.reserve(H);
  out.exp_Q.reserve(H);
  for (Index h = 0; h < H; ++h) {
    out.Q.push_back(log_view(out.shifted_Q[h], beta));
    out.exp_Q.push_back(out.shifted_Q[h].array() + 1.0);
  }
  return out;
}

}  // namespace

OptimalSolution solve_optimal(const TabularMdp& mdp, const RiskParams& beta,
                              const SolverOptions& opts) {
  require_exponent_budget(beta, mdp.horizon, opts);
  MarkovPolicy policy(mdp.horizon, mdp.num_states);
  const double b = beta.beta();
  auto values = backward_induction(mdp, b, [&](Index h, Index s, const auto& row) {
    const Index a = best_action(row, b);
    policy.at(h, s) = a;
    return a;
  });
  return {std::move(values), std::move(policy)};
}

RiskValueTables evaluate_policy(const TabularMdp& mdp, const MarkovPolicy& pi,
                                const RiskParams& beta, const SolverOptions& opts) {
  require_exponent_budget(beta, mdp.horizon, opts);
  require_valid(mdp, pi);
  return backward_induction(mdp, beta.beta(),
                            [&](Index h, Index s, const auto&) { return pi(h, s); });
}

namespace {

struct Enumeration {
  const TabularMdp& mdp;
  const MarkovPolicy& pi;
  double beta;
  // Extended precision for the same reason as mass_defect.
  long double shifted_sum = 0.0L;  // sum Pr[tau] (e^{beta R(tau)} - 1)
  long double mass = 0.0L;         // sum Pr[tau]

  void walk(Index h, Index s, long double probability, double reward) {
    if (h == mdp.horizon) {
      shifted_sum += probability * std::expm1(static_cast<long double>(beta) * reward);
      mass += probability;
      return;
    }
    const Index a = pi(h, s);
    const double r = mdp.reward(h, s, a);
    for (Index n = 0; n < mdp.num_states; ++n) {
      const double p = mdp.prob(h, s, a, n);
      if (p > 0.0) walk(h + 1, n, probability * p, reward + r);
    }
  }
};

}  // namespace

double brute_force_value(const TabularMdp& mdp, const MarkovPolicy& pi, const RiskParams& beta,
                         double guard) {
  require_valid(mdp, pi);
  const double paths = std::pow(static_cast<double>(mdp.num_states), static_cast<double>(mdp.horizon));
  if (paths > guard) {
    std::ostringstream os;
    os << "trajectory enumeration S^H = " << paths << " exceeds the guard " << guard;
    throw ParameterError(os.str());
  }
  Enumeration e{mdp, pi, beta.beta()};
  e.walk(0, mdp.initial_state, 1.0L, 0.0);
  return static_cast<double>(std::log1p(e.shifted_sum + (e.mass - 1.0L)) / beta.beta());
}

RiskNeutralTables solve_risk_neutral(const TabularMdp& mdp, const std::optional<MarkovPolicy>& pi) {
  const Index S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  if (pi) require_valid(mdp, *pi);
  RiskNeutralTables out;
  out.V = Eigen::MatrixXd::Zero(H + 1, S);
  out.Q.assign(H, Eigen::MatrixXd::Zero(S, A));
  out.policy = pi ? *pi : MarkovPolicy(H, S);
  for (Index h = H; h-- > 0;) {
    const Eigen::VectorXd next = out.V.row(h + 1).transpose();
    for (Index a = 0; a < A; ++a)
      out.Q[h].col(a) = mdp.rewards[h].col(a) + mdp.transitions[h][a] * next;
    for (Index s = 0; s < S; ++s) {
      if (!pi) out.policy.at(h, s) = best_action(out.Q[h].row(s), 1.0);
      out.V(h, s) = out.Q[h](s, out.policy(h, s));
    }
  }
  return out;
}

}  // namespace erl
