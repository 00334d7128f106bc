#pragma once

#include "erl/mdp.hpp"

#include <optional>

namespace erl {

/// Entropic risk parameter beta: positive is risk-seeking, negative risk-averse.
class RiskParams {
 public:
  static constexpr double kMinMagnitude = 1e-8;
  static constexpr double kMaxMagnitude = 50.0;

  explicit RiskParams(double beta);

  double beta() const { return beta_; }
  double magnitude() const { return beta_ < 0 ? -beta_ : beta_; }
  bool seeking() const { return beta_ > 0; }
  double sign() const { return beta_ > 0 ? 1.0 : -1.0; }

 private:
  double beta_;
};

struct SolverOptions {
  /// Largest |beta| * H accepted; e^30 ~ 1e13 keeps doubles comfortable.
  double exponent_budget = 30.0;
};

/// Throws ParameterError if |beta| * H exceeds the budget.
void require_exponent_budget(const RiskParams& beta, Index horizon, const SolverOptions& opts = {});

/// Entropic value tables. Rows are 0-based steps; V has H+1 rows with the
/// terminal row identically zero.
///
/// `shifted_V` / `shifted_Q` hold e^{beta * value} - 1. The recursion runs on
/// these so that (1/beta) log(.) stays accurate when |beta| is tiny;
/// `exp_V` / `exp_Q` are the plain exponential twins, 1 + shifted.
struct RiskValueTables {
  double beta = 0.0;
  Eigen::MatrixXd V;                    // (H+1) x S
  std::vector<Eigen::MatrixXd> Q;       // H entries, S x A
  Eigen::MatrixXd exp_V;                // (H+1) x S
  std::vector<Eigen::MatrixXd> exp_Q;   // H entries, S x A
  Eigen::MatrixXd shifted_V;            // (H+1) x S
  std::vector<Eigen::MatrixXd> shifted_Q;

  Index horizon() const { return Q.size(); }
};

struct OptimalSolution {
  RiskValueTables values;
  /// Greedy optimal policy, lowest action index on ties.
  MarkovPolicy policy;
};

/// Backward induction on the exponential Bellman equation.
OptimalSolution solve_optimal(const TabularMdp& mdp, const RiskParams& beta,
                              const SolverOptions& opts = {});

/// Same recursion with V_h(s) = Q_h(s, pi_h(s)).
RiskValueTables evaluate_policy(const TabularMdp& mdp, const MarkovPolicy& pi,
                                const RiskParams& beta, const SolverOptions& opts = {});

/// Upper limit on the number of trajectories brute_force_value will walk.
inline constexpr double kEnumerationGuard = 1e6;

/// Independent oracle for evaluate_policy: enumerates every
/// positive-probability trajectory under pi and returns
/// (1/beta) log sum_tau Pr[tau] e^{beta R(tau)} at (h=1, s1).
/// Throws ParameterError if S^H exceeds the enumeration guard.
double brute_force_value(const TabularMdp& mdp, const MarkovPolicy& pi, const RiskParams& beta,
                         double guard = kEnumerationGuard);

struct RiskNeutralTables {
  Eigen::MatrixXd V;               // (H+1) x S
  std::vector<Eigen::MatrixXd> Q;  // H entries, S x A
  MarkovPolicy policy;             // pi if given, else greedy optimal
};

/// Linear Bellman backward induction. Without a policy, computes the optimal
/// tables (lowest-index tie-break).
RiskNeutralTables solve_risk_neutral(const TabularMdp& mdp,
                                     const std::optional<MarkovPolicy>& pi = std::nullopt);

/// Index of the best entry of `row` in the entropic order for this beta:
/// largest Q, i.e. largest shifted value for beta > 0 and smallest for
/// beta < 0. Lowest index wins ties.
template <typename Row>
Index best_action(const Row& row, double beta) {
  Index best = 0;
  for (Eigen::Index a = 1; a < row.size(); ++a) {
    const bool better = beta > 0 ? row(a) > row(best) : row(a) < row(best);
    if (better) best = static_cast<Index>(a);
  }
  return best;
}

}  // namespace erl
