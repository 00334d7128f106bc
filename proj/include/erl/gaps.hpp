#pragma once

#include "erl/risk_values.hpp"

#include "json.hpp"

#include <optional>
#include <stdexcept>
#include <string_view>

namespace erl {

/// psi (the cascaded-gap normalizer) and semi_psi with psi = semi_psi / beta:
/// beta > 0: psi = 1/beta, semi_psi = 1; beta < 0: psi = e^{-beta H}/beta,
/// semi_psi = e^{-beta H}.
struct Normalizers {
  double psi = 0.0;
  double semi_psi = 0.0;
  double beta = 0.0;
  Index horizon = 0;
};

Normalizers normalizers(const RiskParams& beta, Index horizon);

enum class GapKind { cascaded, semi_normalized, risk_neutral, alternative, controlled, optimism };
std::string_view to_string(GapKind kind);

/// 0-based step h.
struct GapLocation {
  Index h = 0;
  Index s = 0;
  Index a = 0;
  friend bool operator==(const GapLocation&, const GapLocation&) = default;
};

struct GapValue {
  double value = 0.0;
  GapKind kind = GapKind::cascaded;
  GapLocation location;
  double prefix_reward = 0.0;
};

// All entropic gaps below depend on the prefix only through its reward
// R(tau_{h-1}), which is passed as `prefix_reward`.

/// psi * e^{beta R} * [e^{beta V*_h(s)} - e^{beta Q*_h(s,a)}].
GapValue cascaded_gap(const RiskValueTables& optimal, Index h, Index s, Index a, double prefix_reward);
/// (1/beta) * e^{beta R} * [e^{beta V*_h(s)} - e^{beta Q*_h(s,a)}]; cascaded = semi_psi * this.
GapValue semi_normalized_gap(const RiskValueTables& optimal, Index h, Index s, Index a,
                             double prefix_reward);
/// V~*_h(s) - Q~*_h(s,a).
GapValue risk_neutral_gap(const RiskNeutralTables& neutral, Index h, Index s, Index a);
/// sign(beta) * e^{beta R} * [e^{beta V*_h(s)} - e^{beta Q*_h(s,a)}].
GapValue alternative_gap(const RiskValueTables& optimal, Index h, Index s, Index a, double prefix_reward);
/// semi_psi * (1/beta) * e^{beta R} * [e^{beta V*_h(s)} - e^{beta Q^pi_h(s,a)}].
GapValue controlled_gap(const RiskValueTables& optimal, const RiskValueTables& pi_eval, Index h,
                        Index s, Index a, double prefix_reward);
/// semi_psi * (1/beta) * e^{beta R} * [e^{beta Q^k_h(s,a)} - e^{beta V*_h(s)}] for an
/// estimate given as its exponential value e^{beta Q^k_h(s,a)}.
GapValue optimism_gap(const RiskValueTables& optimal, double estimate_exp_q, Index h, Index s,
                      Index a, double prefix_reward);

enum class Reachability { reachable_only, unconstrained };
std::string_view to_string(Reachability mode);

inline constexpr double kDefaultZeroTolerance = 1e-9;

/// Raised by minimal_gap when every action is optimal everywhere.
class NoNonzeroGap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MinimalGapReport {
  double delta_min = 0.0;       // cascaded scale
  double semi_delta_min = 0.0;  // semi-normalized scale
  GapLocation witness;
  double witness_prefix_reward = 0.0;
  Reachability mode = Reachability::reachable_only;
  double zero_tolerance = kDefaultZeroTolerance;
};

/// Minimum nonzero cascaded gap over (h, s, a) and prefixes. A location
/// counts as nonzero when its prefix-free semi-normalized bracket exceeds
/// zero_tolerance. The prefix factor is minimized at the least prefix reward
/// for beta > 0 and the greatest for beta < 0; reachable_only restricts to
/// positive-probability prefixes, unconstrained uses [0, h-1] everywhere.
MinimalGapReport minimal_gap(const TabularMdp& mdp, const RiskValueTables& optimal,
                             Reachability mode = Reachability::reachable_only,
                             double zero_tolerance = kDefaultZeroTolerance);

/// D^pi_h(s) - Delta_h(s, a; R) - E_{s'}[D^pi_{h+1}(s')] with a = pi_h(s),
/// D^pi_h = semi_psi (1/beta) e^{beta R} (e^{beta V*_h} - e^{beta V^pi_h}) and
/// the next-step prefix reward R + r_h(s, a). Vanishes identically.
double bellman_difference_residual(const TabularMdp& mdp, const RiskValueTables& optimal,
                                   const MarkovPolicy& pi, const RiskValueTables& pi_eval, Index h,
                                   Index s, double prefix_reward);

/// Risk-neutral analogue with D~^pi = V~* - V~^pi and the gap V~* - Q~*.
double risk_neutral_bellman_difference_residual(const TabularMdp& mdp,
                                                const RiskNeutralTables& optimal,
                                                const MarkovPolicy& pi,
                                                const RiskNeutralTables& pi_eval, Index h, Index s);

/// Both sides of the exponential-regret decomposition at (1, s1):
///   (1/beta)[e^{beta V*_1} - e^{beta V^pi_1}](s1) = E[ sum_h semi-gap_h(s_h, pi_h(s_h); tau_{h-1}) ].
/// The expectation is a forward pass over the reward-weighted occupancy
/// m_h(s) = E[1{s_h = s} e^{beta R(tau_{h-1})}] under pi.
struct ExpRegretDecomposition {
  double exponential_regret = 0.0;
  double gap_expectation = 0.0;
  double residual() const { return exponential_regret - gap_expectation; }
};

ExpRegretDecomposition decompose_exponential_regret(const TabularMdp& mdp,
                                                    const RiskValueTables& optimal,
                                                    const MarkovPolicy& pi);

double decomposition_residual(const TabularMdp& mdp, const RiskValueTables& optimal,
                              const MarkovPolicy& pi);

struct LocationGaps {
  GapLocation location;
  bool reachable = false;
  double extremal_prefix_reward = 0.0;
  double semi_normalized = 0.0;  // at the extremal prefix
  double cascaded = 0.0;         // at the extremal prefix
  double risk_neutral = 0.0;
};

struct GapReport {
  Normalizers norm;
  std::vector<LocationGaps> locations;
  std::optional<MinimalGapReport> minimal;
  Reachability mode = Reachability::reachable_only;
  double zero_tolerance = kDefaultZeroTolerance;
  /// (e^{|beta| H} - 1) / |beta|, the magnitude cascaded gaps are compared against.
  double scale_reference = 0.0;
};

GapReport gap_report(const TabularMdp& mdp, const RiskParams& beta,
                     Reachability mode = Reachability::reachable_only,
                     double zero_tolerance = kDefaultZeroTolerance);

nlohmann::json to_json(const GapReport& report);

}  // namespace erl
