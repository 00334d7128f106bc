#include "doctest.h"

#include "erl/check.hpp"
#include "erl/instances.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace erl;

namespace {

TabularMdp one_step_unit_vs_zero() {
  TabularMdp mdp(1, 2, 1, 0);
  mdp.rewards[0](0, 0) = 1.0;
  return mdp;
}

/// Cascaded gap computed from scratch from test-side values.
double cascaded_by_enumeration(const TabularMdp& mdp, double beta, Index h, Index s, Index a,
                               double prefix_reward) {
  // Q*_h(s,a): act a, then follow the best policy from each successor.
  const double H = static_cast<double>(mdp.horizon);
  const double semi_psi = beta > 0 ? 1.0 : std::exp(-beta * H);
  double best_v = -INFINITY, q = -INFINITY;
  for (const auto& pi : oracle::all_policies(mdp.horizon, mdp.num_states, mdp.num_actions)) {
    const double v = oracle::entropic_value(mdp, pi, beta, h, s);
    best_v = std::max(best_v, v);
    if (pi(h, s) == a) q = std::max(q, v);
  }
  return semi_psi * std::exp(beta * prefix_reward) * (std::exp(beta * best_v) - std::exp(beta * q)) / beta;
}

}  // namespace

TEST_CASE("normalizers") {
  const auto pos = normalizers(RiskParams(2.0), 3);
  CHECK(pos.semi_psi == 1.0);
  CHECK(pos.psi == doctest::Approx(0.5));
  const auto neg = normalizers(RiskParams(-2.0), 3);
  CHECK(neg.semi_psi == doctest::Approx(std::exp(6.0)));
  CHECK(neg.psi == doctest::Approx(-std::exp(6.0) / 2.0));
}

TEST_CASE("one-step gap is e - 1 for both signs of unit beta") {
  const TabularMdp mdp = one_step_unit_vs_zero();
  for (double b : {1.0, -1.0}) {
    const auto opt = solve_optimal(mdp, RiskParams(b)).values;
    CHECK(cascaded_gap(opt, 0, 0, 1, 0.0).value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    CHECK(cascaded_gap(opt, 0, 0, 0, 0.0).value == 0.0);
    const auto m = minimal_gap(mdp, opt);
    CHECK(m.delta_min == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    CHECK(m.witness == GapLocation{0, 0, 1});
  }
  const auto neutral = solve_risk_neutral(mdp);
  CHECK(risk_neutral_gap(neutral, 0, 0, 1).value == 1.0);
}

TEST_CASE("gap variants relate through the normalizers") {
  const TabularMdp mdp = random_mdp(4, 3, 3, 3, 2);
  for (double b : {0.7, -0.7}) {
    const auto opt = solve_optimal(mdp, RiskParams(b)).values;
    const auto norm = normalizers(RiskParams(b), 3);
    for (Index h = 0; h < 3; ++h)
      for (Index s = 0; s < 3; ++s)
        for (Index a = 0; a < 3; ++a) {
          const double R = 0.37 * static_cast<double>(h);
          const double semi = semi_normalized_gap(opt, h, s, a, R).value;
          CHECK(cascaded_gap(opt, h, s, a, R).value == doctest::Approx(norm.semi_psi * semi));
          CHECK(alternative_gap(opt, h, s, a, R).value == doctest::Approx(std::abs(b) * semi));
          CHECK(semi >= -1e-14);
          CHECK(semi_normalized_gap(opt, h, s, a, R).value ==
                doctest::Approx(std::exp(b * R) * semi_normalized_gap(opt, h, s, a, 0.0).value));
        }
  }
}

TEST_CASE("cascaded gaps match an enumeration oracle") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const TabularMdp mdp = random_mdp(50 + seed, 2, 2, 3, 2);
    for (double b : {1.0, -1.0}) {
      const auto opt = solve_optimal(mdp, RiskParams(b)).values;
      for (Index h = 0; h < 3; ++h)
        for (Index s = 0; s < 2; ++s)
          for (Index a = 0; a < 2; ++a)
            CHECK(cascaded_gap(opt, h, s, a, 0.5).value ==
                  doctest::Approx(cascaded_by_enumeration(mdp, b, h, s, a, 0.5)).epsilon(1e-10));
    }
  }
}

TEST_CASE("minimal gap matches exhaustive prefix enumeration") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const TabularMdp mdp = random_mdp(200 + seed, 3, 2, 3, 1 + seed % 3);
    for (double b : {1.0, -1.0, 0.3}) {
      const auto opt = solve_optimal(mdp, RiskParams(b)).values;
      const auto prefixes = oracle::prefix_rewards(mdp);
      double expected = INFINITY;
      for (const auto& [key, rewards] : prefixes) {
        const auto [h, s] = key;
        for (Index a = 0; a < 2; ++a) {
          if (semi_normalized_gap(opt, h, s, a, 0.0).value <= kDefaultZeroTolerance) continue;
          for (double R : rewards) expected = std::min(expected, cascaded_gap(opt, h, s, a, R).value);
        }
      }
      if (std::isinf(expected)) {
        CHECK_THROWS_AS(minimal_gap(mdp, opt), NoNonzeroGap);
        continue;
      }
      CHECK(minimal_gap(mdp, opt).delta_min == doctest::Approx(expected).epsilon(1e-12));

      // Unconstrained mode ranges over [0, h-1] everywhere, so it can only be smaller.
      CHECK(minimal_gap(mdp, opt, Reachability::unconstrained).delta_min <= expected * (1 + 1e-12));
    }
  }
}

TEST_CASE("no nonzero gap") {
  TabularMdp mdp(2, 2, 2, 0);
  const auto opt = solve_optimal(mdp, RiskParams(1.0)).values;
  CHECK_THROWS_AS(minimal_gap(mdp, opt), NoNonzeroGap);
  const auto report = gap_report(mdp, RiskParams(1.0));
  CHECK_FALSE(report.minimal.has_value());
  CHECK(to_json(report)["delta_min"].is_null());
}

TEST_CASE("Bandit I closed form") {
  const double xi = std::exp(-2.0) / 4.0;
  LowerBoundParams p{RiskParams(1.0), 3, Regime::large_beta, xi, Bandit::bandit_I};
  const TabularMdp mdp = lower_bound_mdp(p);
  const auto m = minimal_gap(mdp, solve_optimal(mdp, p.beta).values);
  CHECK(m.delta_min == doctest::Approx(0.216166179).epsilon(1e-8));
  CHECK(std::abs(m.delta_min - std::expm1(2.0) * xi) < 1e-12);
  CHECK(m.witness == GapLocation{0, 0, 1});
}

TEST_CASE("Bellman-difference residuals vanish") {
  RngStream rng(77, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMdp mdp = random_mdp(seed, 3, 2, 4, 2);
    const auto neutral = solve_risk_neutral(mdp);
    for (double b : {1.0, -1.0, 2.5}) {
      const auto opt = solve_optimal(mdp, RiskParams(b)).values;
      for (int i = 0; i < 5; ++i) {
        const MarkovPolicy pi = random_policy(4, 3, 2, rng);
        const auto eval = evaluate_policy(mdp, pi, RiskParams(b));
        const auto neval = solve_risk_neutral(mdp, pi);
        const Index h = rng.uniform_index(4), s = rng.uniform_index(3);
        const double R = rng.uniform() * static_cast<double>(h);
        CHECK(std::abs(bellman_difference_residual(mdp, opt, pi, eval, h, s, R)) < 1e-9);
        CHECK(std::abs(risk_neutral_bellman_difference_residual(mdp, neutral, pi, neval, h, s)) < 1e-9);
      }
    }
  }
}

TEST_CASE("decomposition matches a trajectory-enumeration expectation") {
  RngStream rng(8, 8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMdp mdp = random_mdp(300 + seed, 3, 2, 3, 2);
    for (double b : {1.0, -1.0}) {
      const auto opt = solve_optimal(mdp, RiskParams(b)).values;
      const MarkovPolicy pi = random_policy(3, 3, 2, rng);
      double expectation = 0.0;
      oracle::for_each_trajectory(mdp, pi, 0, mdp.initial_state,
                                  [&](double p, const std::vector<oracle::Visit>& path) {
                                    double R = 0.0;
                                    for (Index h = 0; h < path.size(); ++h) {
                                      expectation += p * semi_normalized_gap(opt, h, path[h].s, path[h].a, R).value;
                                      R += mdp.reward(h, path[h].s, path[h].a);
                                    }
                                  });
      const double v_star = oracle::optimal_value_by_enumeration(mdp, b);
      const double v_pi = oracle::entropic_value(mdp, pi, b, 0, mdp.initial_state);
      const double exp_regret = (std::exp(b * v_star) - std::exp(b * v_pi)) / b;
      const auto d = decompose_exponential_regret(mdp, opt, pi);
      CHECK(d.gap_expectation == doctest::Approx(expectation).epsilon(1e-12));
      CHECK(d.exponential_regret == doctest::Approx(exp_regret).epsilon(1e-10));
      CHECK(std::abs(d.residual()) < 1e-9);
    }
  }
}

TEST_CASE("controlled and optimism gaps") {
  const TabularMdp mdp = random_mdp(12, 3, 2, 3, 3);
  for (double b : {1.0, -1.0}) {
    const auto opt = solve_optimal(mdp, RiskParams(b));
    const auto same = evaluate_policy(mdp, opt.policy, RiskParams(b));
    for (Index h = 0; h < 3; ++h)
      for (Index s = 0; s < 3; ++s) {
        const Index a = opt.policy(h, s);
        CHECK(std::abs(controlled_gap(opt.values, same, h, s, a, 0.0).value) < 1e-12);
        CHECK(controlled_gap(opt.values, same, h, s, 1 - a, 0.0).value ==
              doctest::Approx(cascaded_gap(opt.values, h, s, 1 - a, 0.0).value));
        CHECK(std::abs(optimism_gap(opt.values, opt.values.exp_V(h, s), h, s, a, 0.0).value) < 1e-15);
        // An estimate above V* in the beta-signed sense has a nonnegative optimism gap.
        const double optimistic = std::exp(b * (opt.values.V(h, s) + 0.1));
        CHECK(optimism_gap(opt.values, optimistic, h, s, a, 0.0).value > 0.0);
      }
  }
}

TEST_CASE("small beta: cascaded gap tends to the risk-neutral gap") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp mdp = random_mdp(seed, 3, 3, 3, 2);
    const auto neutral = solve_risk_neutral(mdp);
    const auto opt = solve_optimal(mdp, RiskParams(1e-5)).values;
    const auto alt = solve_optimal(mdp, RiskParams(-1e-5)).values;
    for (Index h = 0; h < 3; ++h)
      for (Index s = 0; s < 3; ++s)
        for (Index a = 0; a < 3; ++a) {
          const double rn = risk_neutral_gap(neutral, h, s, a).value;
          CHECK(std::abs(cascaded_gap(opt, h, s, a, 0.0).value - rn) < 1e-4);
          CHECK(std::abs(alternative_gap(alt, h, s, a, 0.0).value) <= 2e-5 * rn + 1e-15);
        }
  }
}

TEST_CASE("risk-consistency MDP: gaps only at the last step") {
  const TabularMdp mdp = risk_consistency_mdp(3, 2, 4, 1);
  for (double b : {1.0, -1.0}) {
    const auto opt = solve_optimal(mdp, RiskParams(b)).values;
    for (Index h = 0; h < 4; ++h)
      for (Index s = 0; s < 3; ++s) {
        CHECK(opt.V(h, s) == doctest::Approx(static_cast<double>(4 - h)).epsilon(1e-13));
        for (Index a = 0; a < 2; ++a) {
          const double g = semi_normalized_gap(opt, h, s, a, 0.0).value;
          if (h < 3 || a == 0)
            CHECK(std::abs(g) < 1e-12);
          else
            CHECK(g > 0.1);
        }
      }
  }
  const auto neutral = solve_risk_neutral(mdp);
  for (Index s = 0; s < 3; ++s) CHECK(risk_neutral_gap(neutral, 3, s, 1).value == doctest::Approx(1.0));
}

TEST_CASE("gap report JSON") {
  LowerBoundParams p{RiskParams(-1.0), 3, Regime::large_beta, std::exp(-2.0) / 4.0, Bandit::bandit_I};
  const auto report = gap_report(lower_bound_mdp(p), p.beta, Reachability::unconstrained);
  const auto doc = to_json(report);
  CHECK(doc["mode"] == "unconstrained");
  CHECK(doc["locations"].size() == 3 * 3 * 2);
  CHECK(doc["witness"]["h"] == 1);
  CHECK(doc["semi_psi"].get<double>() == doctest::Approx(std::exp(3.0)));
  CHECK(doc["delta_min"].get<double>() == doctest::Approx(report.minimal->delta_min));
  CHECK(doc["scale_reference"].get<double>() == doctest::Approx(std::expm1(3.0)));
}
