#include "erl/agents.hpp"

#include <cmath>
#include <sstream>

namespace erl {

void BonusConfig::validate() const {
  if (!(c > 0.0)) throw ParameterError("bonus constant c must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("delta must lie in (0, 1]");
  if (episodes < 1) throw ParameterError("K must be at least 1");
}

double BonusConfig::log_term(Index S, Index A, Index H) const {
  return std::log(2.0 * static_cast<double>(S) * static_cast<double>(A) * static_cast<double>(H) *
                  static_cast<double>(episodes) / delta);
}

namespace {

/// e^{beta (H-h+1)} for 0-based step h.
double exp_cap(double beta, Index H, Index h) { return std::exp(beta * static_cast<double>(H - h)); }

double truncate(double beta, double cap, double estimate, double bonus) {
  return beta > 0 ? std::min(cap, estimate + bonus) : std::max(cap, estimate - bonus);
}

void refresh_value(const std::vector<Eigen::MatrixXd>& Q, Eigen::MatrixXd& V, Index h, Index s) {
  V(h, s) = Q[h].row(s).maxCoeff();
}

}  // namespace

Rsvi2State make_rsvi2_state(Index S, Index A, Index H, const RiskParams& beta) {
  Rsvi2State st;
  st.S = S;
  st.A = A;
  st.H = H;
  st.V = Eigen::MatrixXd::Zero(H + 1, S);
  for (Index h = 0; h < H; ++h) {
    const double remaining = static_cast<double>(H - h);
    st.Q.push_back(Eigen::MatrixXd::Constant(S, A, remaining));
    st.V.row(h).setConstant(remaining);
    st.G.push_back(Eigen::MatrixXd::Constant(S, A, exp_cap(beta.beta(), H, h)));
    st.w.push_back(Eigen::MatrixXd::Zero(S, A));
    st.b.push_back(Eigen::MatrixXd::Zero(S, A));
    st.N.push_back(CountMatrix::Zero(S, A));
    st.transition_counts.emplace_back(A, CountMatrix::Zero(S, S));
    st.reward.push_back(Eigen::MatrixXd::Zero(S, A));
  }
  return st;
}

void rsvi2_plan(Rsvi2State& st, const BonusConfig& cfg, const RiskParams& beta) {
  const double b = beta.beta();
  const double confidence = static_cast<double>(st.S) * cfg.log_term(st.S, st.A, st.H);
  for (Index h = st.H; h-- > 0;) {
    const double cap = exp_cap(b, st.H, h);
    const double scale = cfg.c * std::abs(cap - 1.0);
    const Eigen::ArrayXd next_exp = (b * st.V.row(h + 1).array()).exp().transpose();
    for (Index s = 0; s < st.S; ++s) {
      for (Index a = 0; a < st.A; ++a) {
        const std::uint64_t n = st.N[h](s, a);
        if (n == 0) continue;
        const double count = static_cast<double>(n);
        const auto& counts = st.transition_counts[h][a];
        double weighted = 0.0;
        for (Index next = 0; next < st.S; ++next)
          weighted += static_cast<double>(counts(s, next)) * next_exp(next);
        st.w[h](s, a) = std::exp(b * st.reward[h](s, a)) * weighted / count;
        st.b[h](s, a) = scale * std::sqrt(confidence / count);
        st.G[h](s, a) = truncate(b, cap, st.w[h](s, a), st.b[h](s, a));
        st.Q[h](s, a) = std::log(st.G[h](s, a)) / b;
      }
      refresh_value(st.Q, st.V, h, s);
    }
  }
}

void rsvi2_record(Rsvi2State& st, Index h, Index s, Index a, double r, Index next) {
  ++st.N[h](s, a);
  ++st.transition_counts[h][a](s, next);
  st.reward[h](s, a) = r;
}

Rsq2State make_rsq2_state(Index S, Index A, Index H, const RiskParams& beta) {
  Rsq2State st;
  st.S = S;
  st.A = A;
  st.H = H;
  st.V = Eigen::MatrixXd::Zero(H + 1, S);
  for (Index h = 0; h < H; ++h) {
    const double init = beta.seeking() ? static_cast<double>(H - h) : 0.0;
    st.Q.push_back(Eigen::MatrixXd::Constant(S, A, init));
    st.V.row(h).setConstant(init);
    st.G.push_back(Eigen::MatrixXd::Constant(S, A, std::exp(beta.beta() * init)));
    st.w.push_back(Eigen::MatrixXd::Zero(S, A));
    st.N.push_back(CountMatrix::Zero(S, A));
  }
  return st;
}

void rsq2_observe(Rsq2State& st, const BonusConfig& cfg, const RiskParams& beta, Index h, Index s,
                  Index a, double r, Index next) {
  const double b = beta.beta();
  const std::uint64_t t = ++st.N[h](s, a);
  const double alpha = rsq2_learning_rate(st.H, t);
  const double target = std::exp(b * (r + st.V(h + 1, next)));
  st.w[h](s, a) = (1.0 - alpha) * st.G[h](s, a) + alpha * target;
  const double cap = exp_cap(b, st.H, h);
  const double bonus = cfg.c * std::abs(cap - 1.0) *
                       std::sqrt(static_cast<double>(st.H) * cfg.log_term(st.S, st.A, st.H) /
                                 static_cast<double>(t));
  st.G[h](s, a) = truncate(b, cap, st.w[h](s, a), alpha * bonus);
  st.Q[h](s, a) = std::log(st.G[h](s, a)) / b;
  refresh_value(st.Q, st.V, h, s);
}

Index greedy_action(const std::vector<Eigen::MatrixXd>& Q, Index h, Index s) {
  return best_action(Q[h].row(s), 1.0);
}

MarkovPolicy greedy_policy(const std::vector<Eigen::MatrixXd>& Q) {
  const Index H = Q.size();
  const Index S = H ? static_cast<Index>(Q.front().rows()) : 0;
  MarkovPolicy pi(H, S);
  for (Index h = 0; h < H; ++h)
    for (Index s = 0; s < S; ++s) pi.at(h, s) = greedy_action(Q, h, s);
  return pi;
}

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::rsvi2: return "rsvi2";
    case AgentKind::rsq2: return "rsq2";
    case AgentKind::uniform_random: return "uniform_random";
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "rsvi2") return AgentKind::rsvi2;
  if (name == "rsq2") return AgentKind::rsq2;
  if (name == "uniform_random" || name == "uniform") return AgentKind::uniform_random;
  throw ParameterError("unknown agent '" + std::string(name) + "' (expected rsvi2, rsq2 or uniform_random)");
}

Rsvi2Agent::Rsvi2Agent(Index S, Index A, Index H, const RiskParams& beta, const BonusConfig& cfg)
    : beta_(beta), cfg_(cfg), state_(make_rsvi2_state(S, A, H, beta)) {
  cfg_.validate();
}

Rsq2Agent::Rsq2Agent(Index S, Index A, Index H, const RiskParams& beta, const BonusConfig& cfg)
    : beta_(beta), cfg_(cfg), state_(make_rsq2_state(S, A, H, beta)) {
  cfg_.validate();
}

UniformRandomAgent::UniformRandomAgent(Index S, Index A, Index H, std::uint64_t seed)
    : A_(A), policy_(H, S), rng_(seed, 1) {}

void UniformRandomAgent::begin_episode(std::uint64_t) {
  for (Index h = 0; h < policy_.horizon(); ++h)
    for (Index s = 0; s < policy_.num_states(); ++s) policy_.at(h, s) = rng_.uniform_index(A_);
}

std::unique_ptr<EpisodicAgent> make_agent(AgentKind kind, Index S, Index A, Index H,
                                          const RiskParams& beta, const BonusConfig& cfg,
                                          std::uint64_t seed) {
  switch (kind) {
    case AgentKind::rsvi2: return std::make_unique<Rsvi2Agent>(S, A, H, beta, cfg);
    case AgentKind::rsq2: return std::make_unique<Rsq2Agent>(S, A, H, beta, cfg);
    case AgentKind::uniform_random: return std::make_unique<UniformRandomAgent>(S, A, H, seed);
  }
  throw ParameterError("unknown agent kind");
}

}  // namespace erl
