#include "erl/check.hpp"
#include "erl/harness.hpp"
#include "erl/instances.hpp"
#include "erl/mdp_io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

using nlohmann::json;
using namespace erl;

namespace {

constexpr int kUsageError = 2;
constexpr int kFailure = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json q_json(const std::vector<Eigen::MatrixXd>& Q) {
  json out = json::array();
  for (const auto& q : Q) out.push_back(matrix_json(q));
  return out;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
}

RiskParams require_beta(const std::optional<double>& beta) {
  if (!beta) throw UsageError("--beta is required");
  if (*beta == 0.0)
    throw UsageError("--beta 0 is not an entropic risk parameter; use --risk-neutral for the risk-neutral solver");
  try {
    return RiskParams(*beta);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("--beta: ") + e.what());
  }
}

TabularMdp require_mdp(const std::string& path) {
  if (path.empty()) throw UsageError("--mdp is required");
  return load_mdp(path);
}

struct Flags {
  std::string mdp, config, out;
  std::optional<double> beta;
  bool risk_neutral = false;
  bool unconstrained = false;
  std::string agent;
  std::optional<std::uint64_t> episodes;
  std::optional<double> delta, bonus_c;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::string regime = "large_beta";
  std::string which = "bandit_I";
  std::optional<double> xi;
  Index states = 3, actions = 2, horizon = 3;
  std::optional<Index> support;
  unsigned workers = 0;
};

int cmd_solve(const Flags& f) {
  const TabularMdp mdp = require_mdp(f.mdp);
  json doc;
  if (f.risk_neutral) {
    if (f.beta) throw UsageError("--beta and --risk-neutral are mutually exclusive");
    const RiskNeutralTables t = solve_risk_neutral(mdp);
    doc = {{"risk_neutral", true}, {"V", matrix_json(t.V)}, {"Q", q_json(t.Q)},
           {"policy", to_json(t.policy)}, {"tie_break", "lowest_index"}};
  } else {
    const RiskParams beta = require_beta(f.beta);
    const OptimalSolution sol = solve_optimal(mdp, beta);
    doc = {{"beta", beta.beta()},
           {"V", matrix_json(sol.values.V)},
           {"Q", q_json(sol.values.Q)},
           {"policy", to_json(sol.policy)},
           {"tie_break", "lowest_index"}};
  }
  emit(doc.dump(2) + "\n", f.out);
  return 0;
}

int cmd_gaps(const Flags& f) {
  const RiskParams beta = require_beta(f.beta);
  const TabularMdp mdp = require_mdp(f.mdp);
  const GapReport report =
      gap_report(mdp, beta, f.unconstrained ? Reachability::unconstrained : Reachability::reachable_only);
  emit(to_json(report).dump(2) + "\n", f.out);
  return 0;
}

int cmd_gen(const Flags& f) {
  const Index support = f.support.value_or(f.states);
  const TabularMdp mdp = random_mdp(f.seed.value_or(0), f.states, f.actions, f.horizon, support);
  emit(to_json(mdp).dump(1) + "\n", f.out);
  return 0;
}

int cmd_lb_gen(const Flags& f) {
  const RiskParams beta = require_beta(f.beta);
  if (!f.xi) throw UsageError("--xi is required");
  LowerBoundParams params{beta, f.horizon, parse_regime(f.regime), *f.xi, parse_bandit(f.which)};
  const TabularMdp mdp = lower_bound_mdp(params);
  emit(to_json(mdp).dump(1) + "\n", f.out);
  std::cerr << "suggested episodes: " << lower_bound_suggested_episodes(params)
            << ", semi-normalized minimal gap: " << lower_bound_semi_delta_min(params) << "\n";
  return 0;
}

ExperimentConfig build_config(const Flags& f) {
  json doc = json::object();
  std::filesystem::path base;
  if (!f.config.empty()) {
    doc = json::parse(read_text(f.config));
    base = std::filesystem::path(f.config).parent_path();
  }
  if (!f.mdp.empty()) {
    for (const char* key : {"mdp", "mdp_file", "lower_bound", "random"}) doc.erase(key);
    doc["mdp_file"] = std::filesystem::absolute(f.mdp).string();
  }
  if (f.beta) doc["beta"] = require_beta(f.beta).beta();
  if (!f.agent.empty()) doc["agent"] = f.agent;
  if (f.episodes) doc["episodes"] = *f.episodes;
  if (f.delta) doc["delta"] = *f.delta;
  if (f.bonus_c) doc["bonus_c"] = *f.bonus_c;
  if (!f.seeds.empty()) doc["seeds"] = f.seeds;
  if (f.seed) doc["seeds"] = json::array({*f.seed});
  if (!doc.contains("beta")) throw UsageError("--beta is required (or set \"beta\" in --config)");
  if (!doc.contains("episodes")) throw UsageError("--episodes is required (or set \"episodes\" in --config)");
  return experiment_config_from_json(doc, base);
}

int cmd_run(const Flags& f) {
  if (f.out.empty()) throw UsageError("--out is required");
  const ExperimentConfig config = build_config(f);
  const unsigned workers = f.workers ? f.workers : std::max(1u, config.parallelism);
  const std::vector<RegretTrace> traces = run_seeds(config, workers);
  const std::filesystem::path dir = f.out;
  std::uint64_t violations = 0;
  for (const auto& t : traces) {
    write_text(dir / ("trace_" + t.config_hash + "_seed" + std::to_string(t.seed) + ".csv"), trace_csv(t));
    violations += t.regret_bound_violations;
    std::printf("seed=%llu final_regret=%.6g final_exp_regret=%.6g optimism_violation_fraction=%.4f\n",
                static_cast<unsigned long long>(t.seed), t.final_regret(),
                t.cum_exp_regret.empty() ? 0.0 : t.cum_exp_regret.back(), t.optimism_violation_fraction());
  }
  if (violations) {
    std::cerr << "error: regret exceeded semi_psi * exponential regret in " << violations << " episodes\n";
    return kFailure;
  }
  return 0;
}

int cmd_sweep(const Flags& f) {
  if (f.config.empty()) throw UsageError("--config is required");
  if (f.out.empty()) throw UsageError("--out is required");
  const json doc = json::parse(read_text(f.config));
  const auto grid = sweep_grid_from_json(doc, std::filesystem::path(f.config).parent_path());
  unsigned workers = f.workers;
  if (!workers) workers = doc.value("parallelism", std::max(1u, std::thread::hardware_concurrency()));
  const SweepResult result = sweep(grid, workers);
  const std::filesystem::path dir = f.out;
  write_text(dir / "cells.csv", cells_csv(result));
  write_text(dir / "aggregate.csv", aggregate_csv(result));
  int status = 0;
  for (const auto& cell : result.cells) {
    if (!cell.ok)
      std::cerr << "error: config " << cell.config_index << " seed " << cell.seed << ": " << cell.error << "\n";
    if (cell.regret_bound_violations) status = kFailure;
  }
  return status;
}

int cmd_check(const Flags& f) {
  const RiskParams beta = require_beta(f.beta);
  const TabularMdp mdp = require_mdp(f.mdp);
  CheckOptions opts;
  opts.seed = f.seed.value_or(0);
  const auto results = run_checks(mdp, beta, opts);
  for (const auto& r : results) {
    const char* status = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
    std::printf("%s %s worst=%.3g tolerance=%.3g\n", status, r.name.c_str(), r.worst, r.tolerance);
    if (!r.passed)
      std::cerr << "error: " << r.name << " exceeded tolerance at " << r.detail << "\n";
    else if (r.skipped)
      std::cerr << "note: " << r.name << " skipped: " << r.detail << "\n";
  }
  return all_passed(results) ? 0 : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic-risk episodic RL toolkit"};
  app.require_subcommand(1, 1);
  Flags f;

  auto add_mdp = [&](CLI::App* c) { c->add_option("--mdp", f.mdp, "MDP JSON file")->check(CLI::ExistingFile); };
  auto add_beta = [&](CLI::App* c) { c->add_option("--beta", f.beta, "Risk parameter (nonzero)"); };
  auto add_out = [&](CLI::App* c, const char* what) { c->add_option("--out", f.out, what); };

  auto* solve = app.add_subcommand("solve", "Optimal entropic value tables as JSON");
  add_mdp(solve);
  add_beta(solve);
  solve->add_flag("--risk-neutral", f.risk_neutral, "Solve the expected-return problem instead");
  add_out(solve, "Output file (default stdout)");

  auto* gaps = app.add_subcommand("gaps", "Gap report as JSON");
  add_mdp(gaps);
  add_beta(gaps);
  gaps->add_flag("--unconstrained", f.unconstrained, "Minimize over all prefix rewards in [0, h-1]");
  add_out(gaps, "Output file (default stdout)");

  auto* gen = app.add_subcommand("gen", "Seeded random MDP as JSON");
  gen->add_option("--S", f.states, "States")->check(CLI::PositiveNumber);
  gen->add_option("--A", f.actions, "Actions")->check(CLI::PositiveNumber);
  gen->add_option("--H", f.horizon, "Horizon")->check(CLI::PositiveNumber);
  gen->add_option("--support", f.support, "Transition support size (default S)");
  gen->add_option("--seed", f.seed, "Generator seed");
  add_out(gen, "Output file (default stdout)");

  auto* lb = app.add_subcommand("lb-gen", "Lower-bound bandit MDP as JSON");
  add_beta(lb);
  lb->add_option("--H", f.horizon, "Horizon")->check(CLI::PositiveNumber);
  lb->add_option("--regime", f.regime, "large_beta or small_beta");
  lb->add_option("--xi", f.xi, "Arm separation");
  lb->add_option("--which", f.which, "bandit_I or bandit_II");
  add_out(lb, "Output file (default stdout)");

  auto add_experiment = [&](CLI::App* c) {
    c->add_option("--config", f.config, "Experiment config JSON")->check(CLI::ExistingFile);
    c->add_option("--workers", f.workers, "Worker threads (capped by ERL_THREADS)");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one experiment, write per-seed trace CSVs");
  add_experiment(run_cmd);
  add_mdp(run_cmd);
  add_beta(run_cmd);
  run_cmd->add_option("--agent", f.agent, "rsvi2, rsq2 or uniform_random");
  run_cmd->add_option("--episodes", f.episodes, "Number of episodes K");
  run_cmd->add_option("--delta", f.delta, "Confidence level");
  run_cmd->add_option("--bonus-c", f.bonus_c, "Bonus constant c");
  run_cmd->add_option("--seed", f.seed, "Single seed");
  run_cmd->add_option("--seeds", f.seeds, "Seed list")->delimiter(',');
  add_out(run_cmd, "Output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config grid, write cell and aggregate CSVs");
  add_experiment(sweep_cmd);
  add_out(sweep_cmd, "Output directory");

  auto* check = app.add_subcommand("check", "Run the invariant battery");
  add_mdp(check);
  add_beta(check);
  check->add_option("--seed", f.seed, "Seed for sampled policies and prefixes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*solve) return cmd_solve(f);
    if (*gaps) return cmd_gaps(f);
    if (*gen) return cmd_gen(f);
    if (*lb) return cmd_lb_gen(f);
    if (*run_cmd) return cmd_run(f);
    if (*sweep_cmd) return cmd_sweep(f);
    if (*check) return cmd_check(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kFailure;
  } catch (const json::exception& e) {
    std::cerr << "malformed JSON: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsageError;
}
