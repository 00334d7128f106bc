#pragma once

#include "erl/risk_values.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

namespace erl {

/// Bonus parameters shared by both learners: c is the free constant in front
/// of the bonus, delta the confidence level, episodes the planned K.
struct BonusConfig {
  double c = 1.0;
  double delta = 0.1;
  std::uint64_t episodes = 1;

  /// Throws ParameterError unless c > 0, delta in (0, 1], K >= 1.
  void validate() const;
  /// log(2 S A H K / delta), natural log.
  double log_term(Index S, Index A, Index H) const;
};

using CountMatrix = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Optimistic value-iteration state. Tables are indexed by 0-based step; V
/// carries an extra terminal row fixed at zero.
struct Rsvi2State {
  Index S = 0, A = 0, H = 0;
  std::vector<Eigen::MatrixXd> Q;     // log domain, S x A
  Eigen::MatrixXd V;                  // (H+1) x S
  std::vector<Eigen::MatrixXd> G;     // exponential domain, S x A
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::MatrixXd> b;
  std::vector<CountMatrix> N;         // S x A
  std::vector<std::vector<CountMatrix>> transition_counts;  // [h][a], S x S
  std::vector<Eigen::MatrixXd> reward;  // observed r_h(s, a); valid where N > 0
};

Rsvi2State make_rsvi2_state(Index S, Index A, Index H, const RiskParams& beta);

/// Full backward pass over every visited (s, a): sample average of
/// e^{beta [r + V_{h+1}(s')]} from transition counts, doubly decaying bonus
/// c |e^{beta(H-h+1)} - 1| sqrt(S L / N), beta-signed truncation, then
/// V_h(s) = max_a Q_h(s, a).
void rsvi2_plan(Rsvi2State& state, const BonusConfig& cfg, const RiskParams& beta);

/// Execution-phase bookkeeping: counts and the observed reward.
void rsvi2_record(Rsvi2State& state, Index h, Index s, Index a, double r, Index next);

/// Optimistic Q-learning state.
struct Rsq2State {
  Index S = 0, A = 0, H = 0;
  std::vector<Eigen::MatrixXd> Q;  // S x A
  Eigen::MatrixXd V;               // (H+1) x S
  std::vector<Eigen::MatrixXd> G;
  std::vector<Eigen::MatrixXd> w;
  std::vector<CountMatrix> N;
};

/// Q = V = H-h+1 for beta > 0 and 0 for beta < 0; terminal row zero.
Rsq2State make_rsq2_state(Index S, Index A, Index H, const RiskParams& beta);

/// Learning rate (H+1)/(H+t).
inline double rsq2_learning_rate(Index H, std::uint64_t t) {
  return static_cast<double>(H + 1) / static_cast<double>(H + t);
}

/// One online update after acting at step h.
void rsq2_observe(Rsq2State& state, const BonusConfig& cfg, const RiskParams& beta, Index h,
                  Index s, Index a, double r, Index next);

/// argmax_a Q_h(s, a), lowest index on ties.
Index greedy_action(const std::vector<Eigen::MatrixXd>& Q, Index h, Index s);
MarkovPolicy greedy_policy(const std::vector<Eigen::MatrixXd>& Q);

enum class AgentKind { rsvi2, rsq2, uniform_random };
std::string_view to_string(AgentKind kind);
/// Throws ParameterError for unknown names.
AgentKind parse_agent_kind(std::string_view name);

struct EpisodePolicySnapshot {
  MarkovPolicy policy;
  std::uint64_t episode = 0;
};

/// Common episodic interface used by the harness.
class EpisodicAgent {
 public:
  virtual ~EpisodicAgent() = default;

  virtual AgentKind kind() const = 0;
  /// Called once before the first step of episode k (1-based).
  virtual void begin_episode(std::uint64_t k) = 0;
  virtual Index act(Index h, Index s) const = 0;
  virtual void observe(Index h, Index s, Index a, double r, Index next) = 0;
  /// Greedy policy the agent follows this episode.
  virtual EpisodePolicySnapshot policy_snapshot(std::uint64_t k) const = 0;
  /// Optimistic estimate V_h(s), if the agent keeps one.
  virtual std::optional<double> value_estimate(Index h, Index s) const = 0;
};

class Rsvi2Agent final : public EpisodicAgent {
 public:
  Rsvi2Agent(Index S, Index A, Index H, const RiskParams& beta, const BonusConfig& cfg);

  AgentKind kind() const override { return AgentKind::rsvi2; }
  void begin_episode(std::uint64_t) override { rsvi2_plan(state_, cfg_, beta_); }
  Index act(Index h, Index s) const override { return greedy_action(state_.Q, h, s); }
  void observe(Index h, Index s, Index a, double r, Index next) override {
    rsvi2_record(state_, h, s, a, r, next);
  }
  EpisodePolicySnapshot policy_snapshot(std::uint64_t k) const override {
    return {greedy_policy(state_.Q), k};
  }
  std::optional<double> value_estimate(Index h, Index s) const override { return state_.V(h, s); }

  const Rsvi2State& state() const { return state_; }

 private:
  RiskParams beta_;
  BonusConfig cfg_;
  Rsvi2State state_;
};

class Rsq2Agent final : public EpisodicAgent {
 public:
  Rsq2Agent(Index S, Index A, Index H, const RiskParams& beta, const BonusConfig& cfg);

  AgentKind kind() const override { return AgentKind::rsq2; }
  void begin_episode(std::uint64_t) override {}
  Index act(Index h, Index s) const override { return greedy_action(state_.Q, h, s); }
  void observe(Index h, Index s, Index a, double r, Index next) override {
    rsq2_observe(state_, cfg_, beta_, h, s, a, r, next);
  }
  EpisodePolicySnapshot policy_snapshot(std::uint64_t k) const override {
    return {greedy_policy(state_.Q), k};
  }
  std::optional<double> value_estimate(Index h, Index s) const override { return state_.V(h, s); }

  const Rsq2State& state() const { return state_; }

 private:
  RiskParams beta_;
  BonusConfig cfg_;
  Rsq2State state_;
};

/// Linear-regret baseline: draws a fresh uniformly random deterministic
/// Markov policy at the start of every episode.
class UniformRandomAgent final : public EpisodicAgent {
 public:
  UniformRandomAgent(Index S, Index A, Index H, std::uint64_t seed);

  AgentKind kind() const override { return AgentKind::uniform_random; }
  void begin_episode(std::uint64_t k) override;
  Index act(Index h, Index s) const override { return policy_(h, s); }
  void observe(Index, Index, Index, double, Index) override {}
  EpisodePolicySnapshot policy_snapshot(std::uint64_t k) const override { return {policy_, k}; }
  std::optional<double> value_estimate(Index, Index) const override { return std::nullopt; }

 private:
  Index A_;
  MarkovPolicy policy_;
  RngStream rng_;
};

std::unique_ptr<EpisodicAgent> make_agent(AgentKind kind, Index S, Index A, Index H,
                                          const RiskParams& beta, const BonusConfig& cfg,
                                          std::uint64_t seed);

}  // namespace erl
