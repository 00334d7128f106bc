// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "erl/check.hpp"
#include "erl/harness.hpp"
#include "erl/instances.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

using namespace erl;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

/// Seeded random MDP with S <= 4, A <= 3, H <= 4.
TabularMdp small_mdp(std::uint64_t seed) {
  RngStream rng(seed, 0xacce);
  const Index S = 1 + rng.uniform_index(4);
  const Index A = 1 + rng.uniform_index(3);
  const Index H = 1 + rng.uniform_index(4);
  const Index support = 1 + rng.uniform_index(S);
  return random_mdp(seed, S, A, H, support);
}

void oracle_equivalence() {
  RngStream rng(1, 0x6f72);
  double worst = 0.0;
  int cases = 0;
  for (std::uint64_t m = 0; m < 50; ++m) {
    const TabularMdp mdp = small_mdp(m);
    for (int i = 0; i < 3; ++i) {
      const MarkovPolicy pi = random_policy(mdp.horizon, mdp.num_states, mdp.num_actions, rng);
      for (double b : {2.0, -2.0, 0.5, -0.5, 1e-6, -1e-6}) {
        const RiskParams beta(b);
        const double dp = evaluate_policy(mdp, pi, beta).V(0, mdp.initial_state);
        const double bf = brute_force_value(mdp, pi, beta);
        const double diff = std::abs(dp - bf);
        worst = std::max(worst, diff == 0.0 ? 0.0 : diff / std::abs(bf));
        ++cases;
      }
    }
  }
  report(1, "oracle equivalence", worst <= 1e-10,
         fmt("%d cases, worst relative error %.3g (tolerance 1e-10)", cases, worst));
}

void condition_one_residuals() {
  RngStream rng(2, 0x6331);
  double worst = 0.0, worst_neutral = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Index S = 1 + rng.uniform_index(4);
    const TabularMdp mdp = random_mdp(1000 + i, S, 1 + rng.uniform_index(3), 1 + rng.uniform_index(5),
                                      1 + rng.uniform_index(S));
    const double b = (i % 2 ? -1.0 : 1.0) * (0.1 + 2.9 * rng.uniform());
    const RiskParams beta(b);
    const MarkovPolicy pi = random_policy(mdp.horizon, S, mdp.num_actions, rng);
    const Index h = rng.uniform_index(mdp.horizon), s = rng.uniform_index(S);
    const double prefix = rng.uniform() * static_cast<double>(h);
    const auto opt = solve_optimal(mdp, beta);
    const auto eval = evaluate_policy(mdp, pi, beta);
    worst = std::max(worst, std::abs(bellman_difference_residual(mdp, opt.values, pi, eval, h, s, prefix)));
    const auto neutral = solve_risk_neutral(mdp);
    const auto neutral_eval = solve_risk_neutral(mdp, pi);
    worst_neutral = std::max(
        worst_neutral, std::abs(risk_neutral_bellman_difference_residual(mdp, neutral, pi, neutral_eval, h, s)));
  }
  report(2, "Bellman-difference residuals", worst <= 1e-9 && worst_neutral <= 1e-9,
         fmt("100 samples, worst entropic %.3g, worst risk-neutral %.3g (tolerance 1e-9)", worst, worst_neutral));
}

void decomposition() {
  RngStream rng(3, 0x6463);
  double worst = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 50; ++i) {
    const TabularMdp mdp = small_mdp(2000 + i);
    const double b = (i % 2 ? -1.0 : 1.0) * (0.1 + 1.9 * rng.uniform());
    const RiskParams beta(b);
    const MarkovPolicy pi = random_policy(mdp.horizon, mdp.num_states, mdp.num_actions, rng);
    const auto opt = solve_optimal(mdp, beta);
    worst = std::max(worst, std::abs(decomposition_residual(mdp, opt.values, pi)));

    // Independent expectation over every trajectory of pi.
    double gap_sum = 0.0;
    oracle::for_each_trajectory(mdp, pi, 0, mdp.initial_state,
                                [&](double p, const std::vector<oracle::Visit>& path) {
                                  double R = 0.0;
                                  for (Index h = 0; h < path.size(); ++h) {
                                    gap_sum += p * semi_normalized_gap(opt.values, h, path[h].s, path[h].a, R).value;
                                    R += mdp.reward(h, path[h].s, path[h].a);
                                  }
                                });
    const double v_star = oracle::optimal_value_by_enumeration(mdp, b);
    const double v_pi = oracle::entropic_value(mdp, pi, b, 0, mdp.initial_state);
    const double exp_regret = (std::expm1(b * v_star) - std::expm1(b * v_pi)) / b;
    worst_oracle = std::max(worst_oracle, std::abs(exp_regret - gap_sum));
  }
  report(3, "exponential-regret decomposition", worst <= 1e-9 && worst_oracle <= 1e-9,
         fmt("50 triples, worst residual %.3g, enumeration oracle %.3g (tolerance 1e-9)", worst, worst_oracle));
}

void risk_consistency() {
  double worst_ratio = 0.0;
  for (std::uint64_t m = 0; m < 10; ++m) {
    const TabularMdp mdp = random_mdp(3000 + m, 2 + m % 3, 2 + m % 2, 2 + m % 3, 1 + m % 3);
    const auto neutral = solve_risk_neutral(mdp);
    auto deviation = [&](double b) {
      const auto opt = solve_optimal(mdp, RiskParams(b)).values;
      double worst = 0.0;
      for (Index h = 0; h < mdp.horizon; ++h)
        for (Index s = 0; s < mdp.num_states; ++s)
          for (Index a = 0; a < mdp.num_actions; ++a)
            worst = std::max(worst, std::abs(cascaded_gap(opt, h, s, a, 0.0).value -
                                             risk_neutral_gap(neutral, h, s, a).value));
      return worst;
    };
    const double fine = deviation(1e-5), coarse = deviation(1e-4);
    worst_ratio = std::max(worst_ratio, coarse > 0.0 ? fine / coarse : 0.0);
  }
  report(4, "small-beta risk consistency", worst_ratio <= 0.15,
         fmt("10 MDPs, worst deviation ratio (beta 1e-5 vs 1e-4) %.4f (tolerance 0.15)", worst_ratio));
}

void lower_bound_gap() {
  struct Case {
    double beta;
    Index H;
    Regime regime;
    double xi;
  };
  double worst = 0.0;
  std::string values;
  for (const auto& c : {Case{1.0, 3, Regime::large_beta, std::exp(-2.0) / 4.0},
                        Case{-1.0, 3, Regime::large_beta, std::exp(-2.0) / 4.0},
                        Case{0.2, 9, Regime::small_beta, 1.0 / 36.0}}) {
    const LowerBoundParams p{RiskParams(c.beta), c.H, c.regime, c.xi, Bandit::bandit_I};
    const TabularMdp mdp = lower_bound_mdp(p);
    const double got = minimal_gap(mdp, solve_optimal(mdp, p.beta).values).delta_min;
    const double semi_psi = c.beta > 0 ? 1.0 : std::exp(-c.beta * static_cast<double>(c.H));
    const double expected =
        semi_psi * std::abs(std::exp(c.beta * static_cast<double>(c.H - 1)) - 1.0) * c.xi / std::abs(c.beta);
    worst = std::max(worst, std::abs(got - expected));
    values += fmt(" %.6f", got);
  }
  report(5, "lower-bound instance minimal gap", worst <= 1e-9,
         fmt("delta_min =%s, worst error %.3g (tolerance 1e-9)", values.c_str(), worst));
}

nlohmann::json bandit_config(AgentKind agent, std::uint64_t K, double beta, std::uint64_t seeds) {
  std::vector<std::uint64_t> list;
  for (std::uint64_t s = 0; s < seeds; ++s) list.push_back(s);
  return {{"agent", to_string(agent)},
          {"beta", beta},
          {"episodes", K},
          {"bonus", {{"c", 0.5}, {"delta", 0.1}}},
          {"seeds", list},
          {"lower_bound",
           {{"H", 3}, {"regime", "large_beta"}, {"xi", std::exp(-2.0) / 4.0}, {"which", "bandit_I"}}}};
}

std::vector<double> finals(const std::vector<RegretTrace>& traces) {
  std::vector<double> out;
  for (const auto& t : traces) out.push_back(t.final_regret());
  return out;
}

}  // namespace

int main() {
  oracle_equivalence();
  condition_one_residuals();
  decomposition();
  risk_consistency();
  lower_bound_gap();

  const unsigned workers = resolve_workers(std::max(1u, std::thread::hardware_concurrency()));
  const std::uint64_t K = 50000;
  const auto checkpoints = doubling_checkpoints(6250, 4);
  std::uint64_t bound_violations = 0, runs = 0, episodes = 0;
  auto tally = [&](const std::vector<RegretTrace>& traces) {
    for (const auto& t : traces) {
      bound_violations += t.regret_bound_violations;
      episodes += t.episodes();
      ++runs;
    }
  };

  std::map<AgentKind, ExperimentConfig> configs;
  std::map<AgentKind, std::vector<RegretTrace>> traces;
  for (AgentKind agent : {AgentKind::uniform_random, AgentKind::rsvi2, AgentKind::rsq2}) {
    configs[agent] = experiment_config_from_json(bandit_config(agent, K, 1.0, 20));
    traces[agent] = run_seeds(configs[agent], workers);
    tally(traces[agent]);
  }
  // The negative-beta mirror, for the regret inequality only.
  for (AgentKind agent : {AgentKind::uniform_random, AgentKind::rsvi2, AgentKind::rsq2})
    tally(run_seeds(experiment_config_from_json(bandit_config(agent, 10000, -1.0, 5)), workers));

  report(6, "regret bounded by semi-normalized exponential regret", bound_violations == 0,
         fmt("%llu violations over %llu runs / %llu episodes", static_cast<unsigned long long>(bound_violations),
             static_cast<unsigned long long>(runs), static_cast<unsigned long long>(episodes)));

  // Criterion 7 uses the first 10 seeds of each run set.
  auto first10 = [](const std::vector<RegretTrace>& all) {
    return std::vector<RegretTrace>(all.begin(), all.begin() + 10);
  };
  {
    const double p2 = std::exp(-2.0), xi = std::exp(-2.0) / 4.0;
    auto arm = [](double p) { return std::log1p(p * std::expm1(2.0)); };
    const double slope = 0.5 * (arm(p2 + xi) - arm(p2));
    const double baseline = median(finals(first10(traces[AgentKind::uniform_random])));
    const double baseline_error = std::abs(baseline - slope * static_cast<double>(K)) / (slope * static_cast<double>(K));
    bool pass = baseline_error <= 0.05;
    std::string detail = fmt("uniform median %.1f vs slope*K %.1f (rel. error %.4f)", baseline,
                             slope * static_cast<double>(K), baseline_error);
    for (AgentKind agent : {AgentKind::rsvi2, AgentKind::rsq2}) {
      const auto set = first10(traces[agent]);
      const double med = median(finals(set));
      const auto scaling = scaling_report(set, checkpoints);
      std::string ratios;
      for (const auto& point : scaling.points)
        if (point.doubling_ratio) ratios += fmt("%s%.3f", ratios.empty() ? "" : "/", *point.doubling_ratio);
      pass = pass && med < 0.2 * baseline && scaling.log_consistent;
      detail += fmt("; %s median %.1f (%.1f%% of baseline, need < 20%%), doubling ratios %s (need <= 1.7)",
                    std::string(to_string(agent)).c_str(), med, 100.0 * med / baseline, ratios.c_str());
    }
    report(7, "learning vs. linear baseline", pass, detail);
  }

  {
    std::uint64_t violated = 0, total = 0;
    std::string per_agent;
    for (AgentKind agent : {AgentKind::rsvi2, AgentKind::rsq2}) {
      std::uint64_t v = 0, n = 0;
      for (const auto& t : traces[agent]) {
        for (auto flag : t.optimism_violation) v += flag;
        n += t.episodes();
      }
      per_agent += fmt(", %s %.4f", std::string(to_string(agent)).c_str(), static_cast<double>(v) / n);
      violated += v;
      total += n;
    }
    const double fraction = static_cast<double>(violated) / static_cast<double>(total);
    report(8, "empirical optimism", fraction <= 0.2,
           fmt("pooled violation fraction %.4f over 20 seeds (tolerance 0.2)%s", fraction, per_agent.c_str()));
  }

  {
    int compared = 0, mismatched = 0;
    for (AgentKind agent : {AgentKind::uniform_random, AgentKind::rsvi2, AgentKind::rsq2}) {
      ExperimentConfig again = configs[agent];
      again.seeds.assign(configs[agent].seeds.begin(), configs[agent].seeds.begin() + 10);
      const auto repeat = run_seeds(again, 1);
      for (std::size_t i = 0; i < repeat.size(); ++i) {
        ++compared;
        mismatched += trace_csv(repeat[i]) != trace_csv(traces[agent][i]);
      }
    }
    report(9, "determinism", mismatched == 0,
           fmt("%d of %d repeated runs byte-identical", compared - mismatched, compared));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
