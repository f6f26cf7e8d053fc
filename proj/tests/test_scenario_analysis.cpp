#include <gtest/gtest.h>

#include <random>

#include "mpgame/analysis.hpp"
#include "mpgame/ev_scenario.hpp"

namespace mpgame {
namespace {

TEST(EvScenario, Defaults) {
  const auto p = build_default();
  Vector caps(14);
  caps << 0.04, 0.04, 0.04, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.04, 0.04, 0.04, 0.04;
  EXPECT_EQ(p.caps, caps);
  EXPECT_EQ(p.q, 0.004);
  EXPECT_EQ(p.beta_min, 0.6);
  EXPECT_EQ(p.beta_max, 1.0);
  EXPECT_EQ(p.a, 0.038);
  EXPECT_EQ(build_default(true).agents_per_population, 1000u);
}

TEST(EvScenario, CanonicalMapping) {
  auto p = build_default();
  p.d = Vector::Constant(14, 0.5);
  const auto g = to_canonical(p);
  EXPECT_NEAR(g.populations[0].agents[0].lin(3), 0.154, 1e-15);
  EXPECT_EQ(g.C(0, 0), 0.038);
  EXPECT_EQ(g.C(0, 1), 0.0);
  EXPECT_EQ(g.K, 0.08 * Matrix::Identity(14, 14));
  EXPECT_EQ(g.coupling_lower, Vector::Zero(14));
  EXPECT_EQ(g.num_populations(), 10u);
  EXPECT_EQ(g.populations[0].size(), 50u);
  EXPECT_NEAR(g.populations[0].delta.sum(), 1.0, 1e-15);
}

TEST(EvScenario, CostIdentityWithCanonicalForm) {
  const auto p = build_default();
  const auto g = to_canonical(p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  const auto& agent = g.populations[2].agents[7];
  for (int i = 0; i < 20; ++i) {
    Vector x(14), sigma(14);
    for (int t = 0; t < 14; ++t) {
      x(t) = u(rng);
      sigma(t) = u(rng);
    }
    const double canonical = agent.cost(x) + (g.C * sigma).dot(x);
    EXPECT_NEAR(ev_cost(p, agent.quad, x, sigma), canonical, 1e-12);
  }
}

TEST(EvScenario, SeededBudgetsAreDeterministic) {
  const auto p = build_default();
  const auto a = to_canonical(p);
  const auto b = to_canonical(p);
  auto q = p;
  q.seed = 7;
  const auto c = to_canonical(q);
  EXPECT_EQ(a.populations[4].agents[9].budget, b.populations[4].agents[9].budget);
  EXPECT_NE(a.populations[4].agents[9].budget, c.populations[4].agents[9].budget);
  for (const auto& pop : a.populations) {
    for (const auto& agent : pop.agents) {
      EXPECT_GE(agent.budget, 0.6);
      EXPECT_LE(agent.budget, 1.0);
    }
  }
}

TEST(EvScenario, ValidationErrors) {
  auto p = build_default();
  p.d = Vector::Zero(3);
  EXPECT_THROW(to_canonical(p), std::invalid_argument);
  p = build_default();
  p.beta_min = 4.0;
  p.beta_max = 5.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

class SmallEquilibrium : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto p = build_default();
    p.L = 2;
    p.agents_per_population = 6;
    game_ = new GameConfig(to_canonical(p));
    RunSettings s;
    s.stop_consensus_tol = 1e-3;
    s.stop_fixed_point_tol = 1e-7;
    s.max_iterations = 200000;
    result_ = new RunResult(run_algorithm1(OperatorContext(*game_), GraphSequence::path(2),
                                           default_initial_states(*game_, 2, s), s));
  }
  static void TearDownTestSuite() {
    delete game_;
    delete result_;
  }
  static GameConfig* game_;
  static RunResult* result_;
};
GameConfig* SmallEquilibrium::game_ = nullptr;
RunResult* SmallEquilibrium::result_ = nullptr;

TEST_F(SmallEquilibrium, Converges) {
  EXPECT_EQ(result_->termination, Termination::kConverged);
  EXPECT_LE(constraint_violation(result_->average_state.sigma(), game_->coupling_upper), 1e-4);
}

TEST_F(SmallEquilibrium, EpsilonGainsAreSmallAndBounded) {
  EpsilonOptions opts;
  opts.sample = 12;
  opts.lipschitz = 1.0 / (2 * 0.004);
  const auto report = epsilon_nash_check(*result_, *game_, opts);
  EXPECT_EQ(report.gains.size(), 12u);
  EXPECT_GE(report.max_epsilon, 0.0);
  EXPECT_LT(report.max_epsilon, 1e-3);
  ASSERT_TRUE(report.theoretical_bound.has_value());
  EXPECT_LE(report.max_epsilon, *report.theoretical_bound);
  for (const auto& g : report.gains) {
    EXPECT_NEAR(g.raw_gain, g.equilibrium_cost - g.deviation_cost, 1e-15);
    EXPECT_GE(g.gain, 0.0);
  }
}

TEST_F(SmallEquilibrium, EpsilonMatchesDirectDeviation) {
  // Independent recomputation for agent (1, 2): brute-force solve of the
  // self-aware deviation problem through the generic solver.
  EpsilonOptions opts;
  opts.sample = 12;
  const auto report = epsilon_nash_check(*result_, *game_, opts);
  const AgentId id{1, 2};
  const auto it = std::find_if(report.gains.begin(), report.gains.end(),
                               [&](const DeviationGain& g) { return g.id == id; });
  ASSERT_NE(it, report.gains.end());
  const auto& agent = game_->populations[1].agents[2];
  const double w = game_->populations[1].delta(2) / 2.0;
  const Vector x_hat = result_->final_strategies[1][2];
  const Vector sigma_hat = profile_aggregate(*game_, result_->final_strategies);
  const Vector lambda_hat = result_->average_state.lambda();
  const Vector sigma_minus = sigma_hat - w * x_hat;
  auto cost = [&](const Vector& r) {
    return agent.cost(r) + (game_->C * (sigma_minus + w * r)).dot(r) +
           (game_->K * lambda_hat).dot(r);
  };
  const GradientFn grad = [&](const Vector& r) -> Vector {
    return 2 * agent.quad * r + agent.lin + game_->C * sigma_minus + 2 * w * game_->C * r +
           game_->K * lambda_hat;
  };
  const double lip = 2 * agent.quad + 2 * w * 0.038;
  const auto dev = best_response_generic(grad, lip, Vector::Zero(14),
                                         BoxHyperplaneSet::of(agent), 1e-13);
  EXPECT_NEAR(it->equilibrium_cost, cost(x_hat), 1e-12);
  EXPECT_NEAR(it->deviation_cost, cost(dev.x), 1e-10);
}

TEST_F(SmallEquilibrium, SlackCapsGiveNoViolationEitherWay) {
  // Each slot load is at most 0.25, so caps of 1 never bind.
  GameConfig open = *game_;
  open.coupling_upper = Vector::Ones(14);
  RunSettings s;
  s.max_iterations = 300;
  const auto report = ablation_no_coupling(open, GraphSequence::path(2), s);
  EXPECT_EQ(report.unconstrained_violation.maxCoeff(), 0.0);
  EXPECT_EQ(report.constrained_violation.maxCoeff(), 0.0);
  EXPECT_EQ(report.unconstrained_load_violation.maxCoeff(), 0.0);
  for (const auto& y : report.unconstrained.final_states) EXPECT_EQ(y.lambda(), Vector::Zero(14));
}

TEST(Epsilon, GainAtOwnStrategyIsZeroForFixedResponses) {
  // Every agent's set is a single point, so the deviation is x_hat itself.
  GameConfig g;
  g.C = 0.1 * Matrix::Identity(2, 2);
  g.K = 0.1 * Matrix::Identity(2, 2);
  g.eta = 0.1;
  g.coupling_lower = Vector::Zero(2);
  g.coupling_upper = Vector::Ones(2);
  AgentProfile a{1.0, Vector::Zero(2), Vector::Constant(2, 0.5), Vector::Constant(2, 0.5), 1.0};
  g.populations.push_back(PopulationSpec::uniform({a, a, a}));
  RunSettings s;
  s.max_iterations = 10;
  const auto res = run_oracle(OperatorContext(g), IncentiveState::zeros(2), s);
  const auto report = epsilon_nash_check(res, g, {});
  for (const auto& d : report.gains) EXPECT_EQ(d.raw_gain, 0.0);
  EXPECT_EQ(report.distinct_problems, 1u);
}

TEST(Sweep, ResizeAndDeterminism) {
  auto p = build_default();
  p.L = 2;
  p.agents_per_population = 4;
  const auto g = to_canonical(p);
  const auto big = resize_populations(g, 10);
  EXPECT_EQ(big.populations[1].size(), 10u);
  EXPECT_EQ(big.populations[1].agents[5].budget, g.populations[1].agents[1].budget);
  EXPECT_NEAR(big.populations[1].delta.sum(), 1.0, 1e-15);
  RunSettings s;
  s.max_iterations = 400;
  EpsilonOptions e;
  e.sample = 5;
  const auto rows = sweep_population(g, GraphSequence::path(2), {8, 8}, s, e);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].max_epsilon, rows[1].max_epsilon);
  EXPECT_THROW(sweep_population(g, GraphSequence::path(2), {7}, s, e), std::invalid_argument);
}

TEST(Compare, SinglePopulationGapIsZero) {
  auto p = build_default();
  p.L = 1;
  p.agents_per_population = 5;
  const auto g = to_canonical(p);
  RunSettings s;
  s.max_iterations = 300;
  ComparisonOptions opts;
  opts.reference_settings.max_iterations = 10;
  const auto report = compare_with_oracle(g, GraphSequence::complete(1), s, opts);
  ASSERT_FALSE(report.gaps.empty());
  for (const auto& gp : report.gaps) EXPECT_EQ(gp.gap, 0.0);
  EXPECT_EQ(report.lockstep_terminal_gap, 0.0);
}

}  // namespace
}  // namespace mpgame
