#pragma once

#include "erl/agents.hpp"
#include "erl/gaps.hpp"

#include "json.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>

namespace erl {

struct ExperimentConfig {
  std::shared_ptr<const TabularMdp> mdp;
  AgentKind agent = AgentKind::rsvi2;
  double beta = 1.0;
  std::uint64_t episodes = 1;
  BonusConfig bonus;  // bonus.episodes mirrors `episodes`
  std::vector<std::uint64_t> seeds{0};
  unsigned parallelism = 1;

  /// Throws ParameterError / ValidationError on bad fields.
  void validate() const;
};

/// Parses the JSON mirror of ExperimentConfig. The MDP source is one of
/// "mdp" (inline MDP JSON), "mdp_file" (resolved against base_dir),
/// "lower_bound" ({beta?, H, regime, xi, which}; beta defaults to the run's)
/// or "random" ({seed, S, A, H, support}).
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir = {});

/// Canonical identity of a config, excluding seeds and parallelism.
nlohmann::json identity_json(const ExperimentConfig& config);
/// 16 hex digits, FNV-1a over identity_json's compact dump.
std::string config_hash(const ExperimentConfig& config);

/// Per-episode regret accounting for one seeded run. Index k-1 holds episode k.
struct RegretTrace {
  std::vector<double> inst_regret;
  std::vector<double> cum_regret;
  std::vector<double> exp_regret_inc;
  std::vector<double> cum_exp_regret;
  std::vector<std::uint8_t> optimism_violation;

  std::string config_hash;
  std::uint64_t seed = 0;
  AgentKind agent = AgentKind::rsvi2;
  double semi_psi = 1.0;
  /// Episodes where R(k) > semi_psi * E(k) beyond rounding. Must stay zero.
  std::uint64_t regret_bound_violations = 0;
  /// Steps whose executed action differed from the episode snapshot.
  std::uint64_t snapshot_mismatches = 0;
  /// False for agents without a value estimate (the random baseline).
  bool has_optimism = true;

  std::size_t episodes() const { return inst_regret.size(); }
  double final_regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
  double optimism_violation_fraction() const;
};

/// Runs K episodes: snapshot, plan, roll out, exact regret of the snapshot.
RegretTrace run(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every seed of the config on up to `workers` threads. Output order
/// follows config.seeds.
std::vector<RegretTrace> run_seeds(const ExperimentConfig& config, unsigned workers);

/// Header: episode,inst_regret,cum_regret,exp_regret_inc,cum_exp_regret,optimism_violation
std::string trace_csv(const RegretTrace& trace);

/// Worker count after applying the ERL_THREADS cap (at least 1).
unsigned resolve_workers(unsigned requested);

struct SweepCell {
  std::size_t config_index = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_regret = 0.0;
  double final_exp_regret = 0.0;
  double optimism_violation_fraction = 0.0;
  std::uint64_t regret_bound_violations = 0;
};

struct SweepAggregate {
  std::size_t config_index = 0;
  std::string config_hash;
  AgentKind agent = AgentKind::rsvi2;
  double beta = 0.0;
  double bonus_c = 0.0;
  std::uint64_t episodes = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean = 0.0, median = 0.0, q25 = 0.0, q75 = 0.0, min = 0.0, max = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // sorted by (config index, seed position)
  std::vector<SweepAggregate> aggregates;
};

/// Runs all (config, seed) cells on up to `workers` threads. Cell failures
/// are recorded, not rethrown. Results do not depend on `workers`.
SweepResult sweep(const std::vector<ExperimentConfig>& grid, unsigned workers);

/// Expands {"configs": [...]}, {"base": {...}, "grid": {"beta": [...],
/// "agent": [...], "bonus_c": [...]}} or a single config object.
std::vector<ExperimentConfig> sweep_grid_from_json(const nlohmann::json& doc,
                                                   const std::filesystem::path& base_dir = {});

std::string cells_csv(const SweepResult& result);
std::string aggregate_csv(const SweepResult& result);

/// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct ScalingPoint {
  std::uint64_t K = 0;
  double regret = 0.0;
  double per_log_squared = 0.0;
  double per_log = 0.0;
  double per_sqrt = 0.0;
  /// R(K) / R(K/2); absent at the first checkpoint.
  std::optional<double> doubling_ratio;
};

struct ScalingReport {
  std::vector<ScalingPoint> points;
  double threshold = 1.7;
  int doublings_checked = 3;
  bool log_consistent = false;
};

inline constexpr double kLogConsistencyThreshold = 1.7;

/// K0, 2 K0, 4 K0, ... (count entries).
std::vector<std::uint64_t> doubling_checkpoints(std::uint64_t base, std::size_t count);

/// Median-across-seeds cumulative regret at each checkpoint (which must be
/// successive doublings) and the growth diagnostics. Log-consistent when
/// every one of the last `doublings` ratios is <= threshold. Throws
/// ParameterError with fewer than doublings + 1 checkpoints.
ScalingReport scaling_report(const std::vector<std::vector<double>>& cumulative_regret,
                             std::span<const std::uint64_t> checkpoints,
                             double threshold = kLogConsistencyThreshold, int doublings = 3);
ScalingReport scaling_report(const std::vector<RegretTrace>& traces,
                             std::span<const std::uint64_t> checkpoints,
                             double threshold = kLogConsistencyThreshold, int doublings = 3);

/// Upper-bound formulas with every hidden constant set to 1; a shape
/// reference only, never a pass/fail threshold.
struct BoundCurves {
  std::vector<std::uint64_t> K;
  std::vector<double> value_iteration;  // (e^{|b|H}-1)^2 H^3 S^2 A / (b^2 dmin) log(HSAK/delta)^2
  std::vector<double> q_learning;       // (e^{|b|H}-1)^2 H^4 S A / (b^2 dmin) log(HSAK/delta)
  std::vector<double> trivial;          // H K
};

BoundCurves bound_curves(Index S, Index A, Index H, const RiskParams& beta, double delta_min,
                         double delta, std::span<const std::uint64_t> Ks);

std::string bound_curves_csv(const BoundCurves& curves);

}  // namespace erl
