#include "erl/harness.hpp"

#include "erl/instances.hpp"
#include "erl/mdp_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace erl {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (!mdp) throw ValidationError("experiment has no MDP");
  require_valid(*mdp);
  RiskParams params(beta);
  require_exponent_budget(params, mdp->horizon);
  if (episodes < 1) throw ParameterError("episodes (K) must be at least 1");
  if (seeds.empty()) throw ParameterError("at least one seed is required");
  BonusConfig b = bonus;
  b.episodes = episodes;
  b.validate();
}

namespace {

std::shared_ptr<const TabularMdp> resolve_mdp(const json& doc, double run_beta,
                                              const std::filesystem::path& base_dir) {
  int sources = 0;
  for (const char* key : {"mdp", "mdp_file", "lower_bound", "random"}) sources += doc.contains(key);
  if (sources != 1)
    throw ParameterError("config needs exactly one of mdp, mdp_file, lower_bound, random");

  if (doc.contains("mdp")) return std::make_shared<const TabularMdp>(mdp_from_json(doc.at("mdp")));
  if (doc.contains("mdp_file")) {
    std::filesystem::path path = doc.at("mdp_file").get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return std::make_shared<const TabularMdp>(load_mdp(path));
  }
  if (doc.contains("lower_bound")) {
    const json& lb = doc.at("lower_bound");
    LowerBoundParams params{RiskParams(lb.value("beta", run_beta)), lb.at("H").get<Index>(),
                            parse_regime(lb.value("regime", std::string("large_beta"))),
                            lb.at("xi").get<double>(),
                            parse_bandit(lb.value("which", std::string("bandit_I")))};
    return std::make_shared<const TabularMdp>(lower_bound_mdp(params));
  }
  const json& r = doc.at("random");
  return std::make_shared<const TabularMdp>(
      random_mdp(r.at("seed").get<std::uint64_t>(), r.at("S").get<Index>(), r.at("A").get<Index>(),
                 r.at("H").get<Index>(), r.value("support", r.at("S").get<Index>())));
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ParameterError("experiment config must be a JSON object");
  try {
    ExperimentConfig cfg;
    cfg.beta = doc.at("beta").get<double>();
    RiskParams(cfg.beta);
    cfg.agent = parse_agent_kind(doc.value("agent", std::string("rsvi2")));
    cfg.episodes = doc.at("episodes").get<std::uint64_t>();
    if (doc.contains("bonus")) {
      const json& b = doc.at("bonus");
      cfg.bonus.c = b.value("c", cfg.bonus.c);
      cfg.bonus.delta = b.value("delta", cfg.bonus.delta);
    }
    cfg.bonus.c = doc.value("bonus_c", cfg.bonus.c);
    cfg.bonus.delta = doc.value("delta", cfg.bonus.delta);
    cfg.bonus.episodes = cfg.episodes;
    if (doc.contains("seeds")) cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("seed")) cfg.seeds = {doc.at("seed").get<std::uint64_t>()};
    cfg.parallelism = doc.value("parallelism", 1u);
    cfg.mdp = resolve_mdp(doc, cfg.beta, base_dir);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed experiment config: ") + e.what());
  }
}

json identity_json(const ExperimentConfig& config) {
  return json{{"agent", to_string(config.agent)},
              {"beta", config.beta},
              {"episodes", config.episodes},
              {"bonus", {{"c", config.bonus.c}, {"delta", config.bonus.delta}}},
              {"mdp", config.mdp ? to_json(*config.mdp) : json()}};
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : identity_json(config).dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return hex64(h);
}

double RegretTrace::optimism_violation_fraction() const {
  if (!has_optimism || optimism_violation.empty()) return 0.0;
  std::size_t n = 0;
  for (auto v : optimism_violation) n += v;
  return static_cast<double>(n) / static_cast<double>(optimism_violation.size());
}

namespace {

// Rounding allowance for comparisons between quantities that are equal in
// exact arithmetic.
constexpr double kRoundingSlack = 1e-12;

}  // namespace

RegretTrace run(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const TabularMdp& mdp = *config.mdp;
  const RiskParams beta(config.beta);
  const double b = beta.beta();
  BonusConfig bonus = config.bonus;
  bonus.episodes = config.episodes;

  const OptimalSolution optimal = solve_optimal(mdp, beta);
  const Index s1 = mdp.initial_state;
  const double v_star = optimal.values.V(0, s1);
  const double exp_v_star = optimal.values.exp_V(0, s1);

  auto agent = make_agent(config.agent, mdp.num_states, mdp.num_actions, mdp.horizon, beta, bonus, seed);
  RngStream env(seed, 0);

  RegretTrace trace;
  trace.config_hash = config_hash(config);
  trace.seed = seed;
  trace.agent = config.agent;
  trace.semi_psi = normalizers(beta, mdp.horizon).semi_psi;
  trace.has_optimism = config.agent != AgentKind::uniform_random;
  const std::size_t K = config.episodes;
  trace.inst_regret.reserve(K);
  trace.cum_regret.reserve(K);
  trace.exp_regret_inc.reserve(K);
  trace.cum_exp_regret.reserve(K);
  trace.optimism_violation.reserve(K);

  MarkovPolicy cached_policy;
  double cached_regret = 0.0, cached_exp = 0.0;
  bool have_cache = false;
  double cum_regret = 0.0, cum_exp = 0.0;

  for (std::uint64_t k = 1; k <= K; ++k) {
    agent->begin_episode(k);
    const EpisodePolicySnapshot snapshot = agent->policy_snapshot(k);

    std::uint8_t violation = 0;
    if (auto estimate = agent->value_estimate(0, s1)) {
      const double exp_estimate = std::exp(b * *estimate);
      const double margin = beta.sign() * (exp_estimate - exp_v_star);
      violation = margin < -kRoundingSlack * std::max(1.0, std::abs(exp_v_star)) ? 1 : 0;
    }

    Index s = s1;
    for (Index h = 0; h < mdp.horizon; ++h) {
      const Index a = agent->act(h, s);
      if (a != snapshot.policy(h, s)) ++trace.snapshot_mismatches;
      const Index next = step(mdp, h, s, a, env);
      agent->observe(h, s, a, mdp.reward(h, s, a), next);
      s = next;
    }

    if (!have_cache || !(snapshot.policy == cached_policy)) {
      const RiskValueTables eval = evaluate_policy(mdp, snapshot.policy, beta);
      cached_regret = v_star - eval.V(0, s1);
      cached_exp = (optimal.values.shifted_V(0, s1) - eval.shifted_V(0, s1)) / b;
      for (double* x : {&cached_regret, &cached_exp}) {
        if (*x < 0.0) {
          if (*x < -kRoundingSlack * std::max(1.0, std::abs(v_star)))
            throw std::logic_error("policy evaluation exceeded the optimal value");
          *x = 0.0;
        }
      }
      cached_policy = snapshot.policy;
      have_cache = true;
    }

    cum_regret += cached_regret;
    cum_exp += cached_exp;
    trace.inst_regret.push_back(cached_regret);
    trace.cum_regret.push_back(cum_regret);
    trace.exp_regret_inc.push_back(cached_exp);
    trace.cum_exp_regret.push_back(cum_exp);
    trace.optimism_violation.push_back(violation);

    const double bound = trace.semi_psi * cum_exp;
    if (cum_regret > bound + kRoundingSlack * std::max(1.0, bound)) ++trace.regret_bound_violations;
  }
  return trace;
}

unsigned resolve_workers(unsigned requested) {
  unsigned workers = std::max(1u, requested);
  if (const char* cap = std::getenv("ERL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && v >= 1) workers = std::min(workers, static_cast<unsigned>(v));
  }
  return workers;
}

namespace {

/// Runs job(i) for i in [0, n) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t n, unsigned workers, Job&& job) {
  workers = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<RegretTrace> run_seeds(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  std::vector<RegretTrace> traces(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());
  parallel_for(config.seeds.size(), workers, [&](std::size_t i) {
    try {
      traces[i] = run(config, config.seeds[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

std::string trace_csv(const RegretTrace& trace) {
  std::string out = "episode,inst_regret,cum_regret,exp_regret_inc,cum_exp_regret,optimism_violation\n";
  out.reserve(out.size() + trace.episodes() * 96);
  for (std::size_t i = 0; i < trace.episodes(); ++i) {
    out += std::to_string(i + 1);
    for (double x : {trace.inst_regret[i], trace.cum_regret[i], trace.exp_regret_inc[i],
                     trace.cum_exp_regret[i]}) {
      out += ',';
      out += fmt_double(x);
    }
    out += ',';
    out += std::to_string(trace.optimism_violation[i]);
    out += '\n';
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

SweepResult sweep(const std::vector<ExperimentConfig>& grid, unsigned workers) {
  if (grid.empty()) throw ParameterError("sweep grid is empty");
  SweepResult result;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::string hash;
    try {
      hash = config_hash(grid[c]);
    } catch (const std::exception&) {
      hash = "invalid";
    }
    for (auto seed : grid[c].seeds) {
      SweepCell cell;
      cell.config_index = c;
      cell.config_hash = hash;
      cell.seed = seed;
      result.cells.push_back(cell);
    }
  }

  parallel_for(result.cells.size(), workers, [&](std::size_t i) {
    SweepCell& cell = result.cells[i];
    try {
      const RegretTrace trace = run(grid[cell.config_index], cell.seed);
      cell.ok = true;
      cell.final_regret = trace.final_regret();
      cell.final_exp_regret = trace.cum_exp_regret.empty() ? 0.0 : trace.cum_exp_regret.back();
      cell.optimism_violation_fraction = trace.optimism_violation_fraction();
      cell.regret_bound_violations = trace.regret_bound_violations;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  for (std::size_t c = 0; c < grid.size(); ++c) {
    SweepAggregate agg;
    agg.config_index = c;
    agg.agent = grid[c].agent;
    agg.beta = grid[c].beta;
    agg.bonus_c = grid[c].bonus.c;
    agg.episodes = grid[c].episodes;
    std::vector<double> finals;
    for (const auto& cell : result.cells) {
      if (cell.config_index != c) continue;
      agg.config_hash = cell.config_hash;
      if (cell.ok)
        finals.push_back(cell.final_regret);
      else
        ++agg.failed;
    }
    agg.completed = finals.size();
    if (!finals.empty()) {
      double sum = 0.0;
      for (double x : finals) sum += x;
      agg.mean = sum / static_cast<double>(finals.size());
      agg.median = median(finals);
      agg.q25 = quantile(finals, 0.25);
      agg.q75 = quantile(finals, 0.75);
      agg.min = *std::min_element(finals.begin(), finals.end());
      agg.max = *std::max_element(finals.begin(), finals.end());
    }
    result.aggregates.push_back(agg);
  }
  return result;
}

std::vector<ExperimentConfig> sweep_grid_from_json(const json& doc, const std::filesystem::path& base_dir) {
  std::vector<ExperimentConfig> grid;
  if (doc.contains("configs")) {
    for (const auto& c : doc.at("configs")) grid.push_back(experiment_config_from_json(c, base_dir));
  } else if (doc.contains("base")) {
    const json& base = doc.at("base");
    const json axes = doc.value("grid", json::object());
    const json betas = axes.value("beta", json::array({base.at("beta")}));
    const json agents = axes.value("agent", json::array({base.value("agent", std::string("rsvi2"))}));
    json cs = json::array();
    if (axes.contains("bonus_c"))
      cs = axes.at("bonus_c");
    else
      cs.push_back(nullptr);
    for (const auto& b : betas)
      for (const auto& a : agents)
        for (const auto& c : cs) {
          json cell = base;
          cell["beta"] = b;
          cell["agent"] = a;
          if (!c.is_null()) cell["bonus_c"] = c;
          grid.push_back(experiment_config_from_json(cell, base_dir));
        }
  } else {
    grid.push_back(experiment_config_from_json(doc, base_dir));
  }
  if (grid.empty()) throw ParameterError("sweep grid is empty");
  return grid;
}

std::string cells_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "config_index,config_hash,seed,status,final_regret,final_exp_regret,"
        "optimism_violation_fraction,regret_bound_violations,error\n";
  for (const auto& c : result.cells) {
    std::string error = c.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    os << c.config_index << ',' << c.config_hash << ',' << c.seed << ',' << (c.ok ? "ok" : "failed")
       << ',' << fmt_double(c.final_regret) << ',' << fmt_double(c.final_exp_regret) << ','
       << fmt_double(c.optimism_violation_fraction) << ',' << c.regret_bound_violations << ','
       << error << '\n';
  }
  return os.str();
}

std::string aggregate_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "config_hash,config_index,agent,beta,bonus_c,episodes,completed,failed,"
        "mean_regret,median_regret,q25_regret,q75_regret,min_regret,max_regret\n";
  for (const auto& a : result.aggregates) {
    os << a.config_hash << ',' << a.config_index << ',' << to_string(a.agent) << ','
       << fmt_double(a.beta) << ',' << fmt_double(a.bonus_c) << ',' << a.episodes << ','
       << a.completed << ',' << a.failed << ',' << fmt_double(a.mean) << ','
       << fmt_double(a.median) << ',' << fmt_double(a.q25) << ',' << fmt_double(a.q75) << ','
       << fmt_double(a.min) << ',' << fmt_double(a.max) << '\n';
  }
  return os.str();
}

std::vector<std::uint64_t> doubling_checkpoints(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(base << i);
  return out;
}

ScalingReport scaling_report(const std::vector<std::vector<double>>& cumulative_regret,
                             std::span<const std::uint64_t> checkpoints, double threshold,
                             int doublings) {
  if (cumulative_regret.empty()) throw ParameterError("scaling report needs at least one trace");
  if (doublings < 1 || checkpoints.size() < static_cast<std::size_t>(doublings) + 1)
    throw ParameterError("insufficient checkpoints for the requested number of doublings");
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i] != 2 * checkpoints[i - 1])
      throw ParameterError("checkpoints must be successive doublings");

  ScalingReport report;
  report.threshold = threshold;
  report.doublings_checked = doublings;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const std::uint64_t K = checkpoints[i];
    if (K < 1) throw ParameterError("checkpoint K must be positive");
    std::vector<double> at_k;
    for (const auto& series : cumulative_regret) {
      if (series.size() < K) throw ParameterError("trace shorter than checkpoint " + std::to_string(K));
      at_k.push_back(series[K - 1]);
    }
    ScalingPoint p;
    p.K = K;
    p.regret = median(at_k);
    const double k = static_cast<double>(K);
    const double lk = std::log(k);
    p.per_log_squared = lk > 0 ? p.regret / (lk * lk) : 0.0;
    p.per_log = lk > 0 ? p.regret / lk : 0.0;
    p.per_sqrt = p.regret / std::sqrt(k);
    if (i > 0) {
      const double prev = report.points.back().regret;
      if (prev > 0.0)
        p.doubling_ratio = p.regret / prev;
      else
        p.doubling_ratio = p.regret > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    report.points.push_back(p);
  }
  report.log_consistent = true;
  for (std::size_t i = report.points.size() - static_cast<std::size_t>(doublings); i < report.points.size(); ++i)
    if (!(*report.points[i].doubling_ratio <= threshold)) report.log_consistent = false;
  return report;
}

ScalingReport scaling_report(const std::vector<RegretTrace>& traces,
                             std::span<const std::uint64_t> checkpoints, double threshold,
                             int doublings) {
  std::vector<std::vector<double>> series;
  series.reserve(traces.size());
  for (const auto& t : traces) series.push_back(t.cum_regret);
  return scaling_report(series, checkpoints, threshold, doublings);
}

BoundCurves bound_curves(Index S, Index A, Index H, const RiskParams& beta, double delta_min,
                         double delta, std::span<const std::uint64_t> Ks) {
  if (!(delta_min > 0.0)) throw ParameterError("bound curves need a positive minimal gap");
  const double m = beta.magnitude();
  const double growth = std::expm1(m * static_cast<double>(H));
  const double s = static_cast<double>(S), a = static_cast<double>(A), h = static_cast<double>(H);
  const double prefactor = growth * growth / (m * m * delta_min);
  BoundCurves out;
  for (auto K : Ks) {
    const double L = std::log(h * s * a * static_cast<double>(K) / delta);
    out.K.push_back(K);
    out.value_iteration.push_back(prefactor * h * h * h * s * s * a * L * L);
    out.q_learning.push_back(prefactor * h * h * h * h * s * a * L);
    out.trivial.push_back(h * static_cast<double>(K));
  }
  return out;
}

std::string bound_curves_csv(const BoundCurves& curves) {
  std::string out = "K,value_iteration_bound,q_learning_bound,trivial_bound\n";
  for (std::size_t i = 0; i < curves.K.size(); ++i) {
    out += std::to_string(curves.K[i]) + ',' + fmt_double(curves.value_iteration[i]) + ',' +
           fmt_double(curves.q_learning[i]) + ',' + fmt_double(curves.trivial[i]) + '\n';
  }
  return out;
}

}  // namespace erl
