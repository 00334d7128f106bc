#include "erl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace erl {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string location(Index h, Index s, Index a) {
  std::ostringstream os;
  os << "(h=" << h + 1 << ", s=" << s << ", a=" << a << ")";
  return os.str();
}

ValidationResult fail(std::string message) { return {false, std::move(message)}; }

}  // namespace

TabularMdp::TabularMdp(Index states, Index actions, Index horizon_, Index s1)
    : num_states(states), num_actions(actions), horizon(horizon_), initial_state(s1) {
  rewards.assign(horizon, Eigen::MatrixXd::Zero(states, actions));
  transitions.assign(horizon, std::vector<Eigen::MatrixXd>(
                                  actions, Eigen::MatrixXd::Identity(states, states)));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

double RngStream::uniform() {
  ++draws_;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

Index RngStream::uniform_index(Index n) {
  auto i = static_cast<Index>(uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

ValidationResult validate(const TabularMdp& mdp) {
  const Index S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  if (S == 0 || A == 0 || H == 0) return fail("S, A and H must be positive");
  if (mdp.initial_state >= S) return fail("initial state s1 out of range");
  if (mdp.rewards.size() != H || mdp.transitions.size() != H)
    return fail("reward/transition tables do not have H entries");
  for (Index h = 0; h < H; ++h) {
    if (mdp.rewards[h].rows() != static_cast<Eigen::Index>(S) ||
        mdp.rewards[h].cols() != static_cast<Eigen::Index>(A))
      return fail("reward table at h=" + std::to_string(h + 1) + " is not S x A");
    if (mdp.transitions[h].size() != A)
      return fail("transition table at h=" + std::to_string(h + 1) + " does not have A entries");
    for (Index a = 0; a < A; ++a) {
      const auto& P = mdp.transitions[h][a];
      if (P.rows() != static_cast<Eigen::Index>(S) || P.cols() != static_cast<Eigen::Index>(S))
        return fail("transition matrix at h=" + std::to_string(h + 1) + ", a=" +
                    std::to_string(a) + " is not S x S");
      for (Index s = 0; s < S; ++s) {
        const double r = mdp.rewards[h](s, a);
        if (!(r >= 0.0 && r <= 1.0)) return fail("reward out of [0,1] at " + location(h, s, a));
        double sum = 0.0;
        for (Index n = 0; n < S; ++n) {
          const double p = P(s, n);
          if (!(p >= 0.0) || !std::isfinite(p))
            return fail("negative or non-finite transition probability at " + location(h, s, a));
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
          std::ostringstream os;
          os.precision(17);
          os << "transition row at " << location(h, s, a) << " sums to " << sum;
          return fail(os.str());
        }
      }
    }
  }
  return {};
}

void require_valid(const TabularMdp& mdp) {
  if (auto result = validate(mdp); !result) throw ValidationError(result.message);
}

void require_valid(const TabularMdp& mdp, const MarkovPolicy& pi) {
  if (pi.horizon() != mdp.horizon || pi.num_states() != mdp.num_states)
    throw ValidationError("policy shape does not match the MDP");
  for (Index h = 0; h < mdp.horizon; ++h)
    for (Index s = 0; s < mdp.num_states; ++s)
      if (pi(h, s) >= mdp.num_actions)
        throw ValidationError("policy action out of range at " + location(h, s, pi(h, s)));
}

double prefix_reward(const TabularMdp& mdp, const TrajectoryPrefix& prefix) {
  if (prefix.steps.size() >= mdp.horizon)
    throw std::out_of_range("prefix longer than H-1");
  double total = 0.0;
  for (Index j = 0; j < prefix.steps.size(); ++j) {
    const auto [s, a] = prefix.steps[j];
    if (s >= mdp.num_states || a >= mdp.num_actions)
      throw std::out_of_range("prefix index out of range at " + location(j, s, a));
    total += mdp.reward(j, s, a);
  }
  return total;
}

Index step(const TabularMdp& mdp, Index h, Index s, Index a, RngStream& rng) {
  if (h >= mdp.horizon || s >= mdp.num_states || a >= mdp.num_actions)
    throw std::out_of_range("step index out of range at " + location(h, s, a));
  const double u = rng.uniform();
  const auto& P = mdp.transitions[h][a];
  double cumulative = 0.0;
  Index last_positive = 0;
  for (Index n = 0; n < mdp.num_states; ++n) {
    const double p = P(s, n);
    if (p <= 0.0) continue;
    cumulative += p;
    last_positive = n;
    if (u < cumulative) return n;
  }
  // Row sums slightly below 1 leave a sliver of mass; give it to the last
  // supported state.
  return last_positive;
}

PrefixRewardBounds reachable_prefix_reward_bounds(const TabularMdp& mdp) {
  const Index S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  PrefixRewardBounds out;
  out.min_reward = Eigen::MatrixXd::Constant(H, S, std::numeric_limits<double>::infinity());
  out.max_reward = Eigen::MatrixXd::Constant(H, S, -std::numeric_limits<double>::infinity());
  out.reachable.setConstant(H, S, false);

  out.min_reward(0, mdp.initial_state) = 0.0;
  out.max_reward(0, mdp.initial_state) = 0.0;
  out.reachable(0, mdp.initial_state) = true;

  for (Index h = 0; h + 1 < H; ++h) {
    for (Index s = 0; s < S; ++s) {
      if (!out.reachable(h, s)) continue;
      for (Index a = 0; a < A; ++a) {
        const double r = mdp.reward(h, s, a);
        for (Index n = 0; n < S; ++n) {
          if (!(mdp.prob(h, s, a, n) > 0.0)) continue;
          out.reachable(h + 1, n) = true;
          out.min_reward(h + 1, n) = std::min(out.min_reward(h + 1, n), out.min_reward(h, s) + r);
          out.max_reward(h + 1, n) = std::max(out.max_reward(h + 1, n), out.max_reward(h, s) + r);
        }
      }
    }
  }
  return out;
}

}  // namespace erl
