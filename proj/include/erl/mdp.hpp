#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace erl {

using Index = std::size_t;

/// Thrown when a model, policy or parameter set violates its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for out-of-range or inconsistent parameters (usage errors).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A finite-horizon episodic MDP with deterministic rewards and a fixed
/// initial state. Steps are 0-based internally: step h in [0, H).
///
/// transitions[h][a] is an S x S row-stochastic matrix, row s holding
/// P_h(. | s, a). rewards[h] is S x A.
struct TabularMdp {
  Index num_states = 0;
  Index num_actions = 0;
  Index horizon = 0;
  Index initial_state = 0;
  std::vector<Eigen::MatrixXd> rewards;
  std::vector<std::vector<Eigen::MatrixXd>> transitions;

  TabularMdp() = default;
  /// Zero rewards, all transitions a self-loop.
  TabularMdp(Index states, Index actions, Index horizon, Index initial_state = 0);

  double reward(Index h, Index s, Index a) const { return rewards[h](s, a); }
  double prob(Index h, Index s, Index a, Index next) const {
    return transitions[h][a](s, next);
  }
  auto row(Index h, Index s, Index a) const { return transitions[h][a].row(s); }
};

struct StateAction {
  Index state = 0;
  Index action = 0;
  friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// A full-length trajectory (exactly H steps).
struct Trajectory {
  std::vector<StateAction> steps;
};

/// The first h-1 steps of a trajectory; may be empty.
struct TrajectoryPrefix {
  std::vector<StateAction> steps;
};

/// Deterministic Markov policy: actions(h, s).
class MarkovPolicy {
 public:
  MarkovPolicy() = default;
  MarkovPolicy(Index horizon, Index states, Index fill = 0)
      : table_(horizon, std::vector<Index>(states, fill)) {}

  Index operator()(Index h, Index s) const { return table_[h][s]; }
  Index& at(Index h, Index s) { return table_[h][s]; }
  Index horizon() const { return table_.size(); }
  Index num_states() const { return table_.empty() ? 0 : table_.front().size(); }

  friend bool operator==(const MarkovPolicy&, const MarkovPolicy&) = default;

 private:
  std::vector<std::vector<Index>> table_;
};

/// Seeded random stream. Identical (seed, stream) pairs reproduce identical
/// draws on every platform: the engine is mt19937_64 (fully specified by the
/// standard) and uniforms are built from the top 53 bits by hand.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  Index uniform_index(Index n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

struct ValidationResult {
  bool ok = true;
  std::string message;
  explicit operator bool() const { return ok; }
};

ValidationResult validate(const TabularMdp& mdp);
/// Throws ValidationError carrying validate()'s message.
void require_valid(const TabularMdp& mdp);

void require_valid(const TabularMdp& mdp, const MarkovPolicy& pi);

/// R(tau_{h-1}): sum of rewards along the prefix, 0 for the empty prefix.
double prefix_reward(const TabularMdp& mdp, const TrajectoryPrefix& prefix);

/// Samples s' ~ P_h(. | s, a) by inverse CDF in ascending state order,
/// consuming exactly one uniform.
Index step(const TabularMdp& mdp, Index h, Index s, Index a, RngStream& rng);

/// Extremal prefix rewards over positive-probability prefixes ending in
/// (h, s). Unreachable cells have reachable(h, s) == false.
struct PrefixRewardBounds {
  Eigen::MatrixXd min_reward;  // H x S
  Eigen::MatrixXd max_reward;  // H x S
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reachable;  // H x S
};

PrefixRewardBounds reachable_prefix_reward_bounds(const TabularMdp& mdp);

}  // namespace erl
