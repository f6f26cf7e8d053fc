#include "mpgame/analysis.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "mpgame/projections.hpp"

namespace mpgame {
namespace {

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

bool same_profile(const AgentProfile& a, double delta_a, const AgentProfile& b,
                  double delta_b) {
  return a.quad == b.quad && delta_a == delta_b && a.budget == b.budget &&
         a.lin == b.lin && a.lower == b.lower && a.upper == b.upper;
}

double self_aware_cost(const AgentProfile& agent, double w, const Matrix& C,
                       const Vector& c, const Vector& r) {
  return agent.quad * r.squaredNorm() + w * r.dot(C * r) + c.dot(r);
}

std::vector<AgentId> sample_agents(const GameConfig& config, std::size_t sample,
                                   std::uint64_t seed) {
  std::vector<AgentId> all;
  for (std::size_t l = 0; l < config.populations.size(); ++l) {
    for (std::size_t i = 0; i < config.populations[l].size(); ++i) all.push_back({l, i});
  }
  if (sample >= all.size()) return all;
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(sample);
  std::sort(all.begin(), all.end(), [](const AgentId& a, const AgentId& b) {
    return a.population != b.population ? a.population < b.population : a.agent < b.agent;
  });
  return all;
}

double box_radius(const GameConfig& config) {
  double radius = 0.0;
  for (const auto& pop : config.populations) {
    for (const auto& agent : pop.agents) {
      radius = std::max(radius,
                        agent.lower.cwiseAbs().cwiseMax(agent.upper.cwiseAbs()).norm());
    }
  }
  return radius;
}

// One deviation problem; r* and the two costs.
DeviationGain solve_deviation(const AgentProfile& agent, double w, const Vector& x_hat,
                              const Vector& sigma_hat, const Vector& lambda_hat,
                              const GameConfig& config, bool diagonal_c,
                              const EpsilonOptions& options) {
  const Vector sigma_minus = sigma_hat - w * x_hat;
  const Vector c = agent.lin + config.C * sigma_minus + config.K * lambda_hat;
  const BoxHyperplaneSet set = BoxHyperplaneSet::of(agent);
  Vector r;
  if (diagonal_c) {
    const Vector quad = Vector::Constant(agent.dim(), agent.quad) + w * config.C.diagonal();
    r = solve_diagonal_knapsack(quad, c, set).x;
  } else {
    const Matrix sym = 0.5 * (config.C + config.C.transpose());
    const double lipschitz =
        2.0 * (agent.quad + w * sym.jacobiSvd().singularValues()(0));
    const GradientFn grad = [&](const Vector& u) -> Vector {
      return 2.0 * agent.quad * u + 2.0 * w * (sym * u);
    };
    r = best_response_generic(grad, lipschitz, c, set, options.generic_tol).x;
  }
  DeviationGain g;
  g.equilibrium_cost = self_aware_cost(agent, w, config.C, c, x_hat);
  g.deviation_cost = self_aware_cost(agent, w, config.C, c, r);
  g.raw_gain = g.equilibrium_cost - g.deviation_cost;
  g.gain = std::max(g.raw_gain, 0.0);
  g.deviation_distance = max_abs(r - x_hat);
  return g;
}

}  // namespace

Vector profile_aggregate(const GameConfig& config,
                         const std::vector<std::vector<Vector>>& strategies) {
  const std::size_t L = config.num_populations();
  if (strategies.size() != L) {
    throw std::invalid_argument("profile_aggregate: one strategy list per population");
  }
  Vector sigma = Vector::Zero(config.dim());
  for (std::size_t l = 0; l < L; ++l) {
    const auto& pop = config.populations[l];
    if (strategies[l].size() != pop.size()) {
      throw std::invalid_argument("profile_aggregate: strategy count mismatch");
    }
    for (std::size_t i = 0; i < pop.size(); ++i) {
      sigma += pop.delta(static_cast<Eigen::Index>(i)) * strategies[l][i];
    }
  }
  return sigma / static_cast<double>(L);
}

EpsilonReport epsilon_nash_check(const RunResult& result, const GameConfig& config,
                                 const EpsilonOptions& options) {
  const std::size_t L = config.num_populations();
  if (L == 0) throw std::invalid_argument("epsilon_nash_check: no populations");
  if (options.sample == 0) throw std::invalid_argument("epsilon_nash_check: sample = 0");
  const Vector sigma_hat = profile_aggregate(config, result.final_strategies);
  const Vector& lambda_hat = result.average_state.lambda();
  const bool diagonal_c = is_diagonal(config.C);

  EpsilonReport report;
  struct Solved {
    AgentId id;
    DeviationGain gain;
  };
  std::vector<Solved> solved;
  for (const AgentId& id : sample_agents(config, options.sample, options.seed)) {
    const auto& pop = config.populations[id.population];
    const AgentProfile& agent = pop.agents[id.agent];
    const double delta = pop.delta(static_cast<Eigen::Index>(id.agent));
    const auto twin = std::find_if(solved.begin(), solved.end(), [&](const Solved& s) {
      const auto& other = config.populations[s.id.population];
      return s.id.population == id.population &&
             same_profile(other.agents[s.id.agent],
                          other.delta(static_cast<Eigen::Index>(s.id.agent)), agent, delta);
    });
    DeviationGain gain;
    if (twin != solved.end()) {
      gain = twin->gain;
    } else {
      const double w = delta / static_cast<double>(L);
      gain = solve_deviation(agent, w, result.final_strategies[id.population][id.agent],
                             sigma_hat, lambda_hat, config, diagonal_c, options);
      solved.push_back({id, gain});
    }
    gain.id = id;
    report.max_epsilon = std::max(report.max_epsilon, gain.gain);
    report.max_raw_gain = report.gains.empty() ? gain.raw_gain
                                               : std::max(report.max_raw_gain, gain.raw_gain);
    report.max_deviation_distance =
        std::max(report.max_deviation_distance, gain.deviation_distance);
    report.gains.push_back(gain);
  }
  report.distinct_problems = solved.size();

  if (options.lipschitz) {
    double delta_bar = 0.0;
    for (const auto& pop : config.populations) {
      if (pop.size() > 0) {
        delta_bar = std::max(delta_bar, pop.delta.maxCoeff() * static_cast<double>(pop.size()));
      }
    }
    const double c_norm = config.C.jacobiSvd().singularValues()(0);
    report.theoretical_bound = 2.0 * *options.lipschitz * (c_norm + 1.0) *
                               box_radius(config) * delta_bar /
                               static_cast<double>(config.num_agents());
  }
  return report;
}

ComparisonReport compare_with_oracle(const GameConfig& config, const GraphSequence& seq,
                                     const RunSettings& settings,
                                     const ComparisonOptions& options) {
  const auto shared = std::make_shared<const GameConfig>(config);
  const OperatorContext context(shared);
  const std::size_t L = config.num_populations();
  const std::vector<IncentiveState> init = default_initial_states(config, L, settings);
  const IncentiveState mean_init = average_state(init);

  ComparisonReport report;
  std::vector<Vector> averages;
  report.algorithm = run_algorithm1(
      context, seq, init, settings,
      [&](std::size_t, std::span<const IncentiveState> states) {
        averages.push_back(average_state(states).stacked());
      });

  RunSettings lockstep = settings;
  lockstep.max_iterations = std::max<std::size_t>(report.algorithm.iterations, 1);
  lockstep.stop_fixed_point_tol = std::numeric_limits<double>::min();
  report.gaps.reserve(averages.size());
  report.oracle = run_oracle(context, mean_init, lockstep,
                             [&](std::size_t k, std::span<const IncentiveState> states) {
                               if (k < averages.size()) {
                                 report.gaps.push_back(
                                     {k, max_abs(averages[k] - states[0].stacked())});
                               }
                             });
  if (!averages.empty() && report.algorithm.iterations < averages.size()) {
    report.lockstep_terminal_gap = report.gaps[report.algorithm.iterations].gap;
  }

  GameConfig reference_config = config;
  reference_config.eta = options.reference_eta;
  reference_config.schedule = options.reference_schedule;
  const OperatorContext reference_context(std::move(reference_config));
  report.reference = run_oracle(reference_context, mean_init, options.reference_settings);
  report.terminal_gap = max_abs(report.algorithm.average_state.stacked() -
                                report.reference.average_state.stacked());
  return report;
}

AblationReport ablation_no_coupling(const GameConfig& config, const GraphSequence& seq,
                                    const RunSettings& settings) {
  const OperatorContext context(config);
  const std::vector<IncentiveState> init =
      default_initial_states(config, config.num_populations(), settings);
  AblationReport report;
  report.constrained = run_algorithm1(context, seq, init, settings);
  report.unconstrained = run_no_coupling(context, seq, init, settings);
  const Vector& upper = config.coupling_upper;
  report.constrained_violation =
      slot_violations(report.constrained.average_state.sigma(), upper);
  report.unconstrained_violation =
      slot_violations(report.unconstrained.average_state.sigma(), upper);
  report.constrained_load_violation = slot_violations(
      profile_aggregate(config, report.constrained.final_strategies), upper);
  report.unconstrained_load_violation = slot_violations(
      profile_aggregate(config, report.unconstrained.final_strategies), upper);
  return report;
}

GameConfig resize_populations(const GameConfig& template_config,
                              std::size_t per_population) {
  if (per_population == 0) throw std::invalid_argument("resize_populations: size 0");
  GameConfig out = template_config;
  for (std::size_t l = 0; l < out.populations.size(); ++l) {
    const auto& source = template_config.populations[l].agents;
    if (source.empty()) {
      throw std::invalid_argument("resize_populations: empty template population");
    }
    std::vector<AgentProfile> agents;
    agents.reserve(per_population);
    for (std::size_t i = 0; i < per_population; ++i) agents.push_back(source[i % source.size()]);
    out.populations[l] = PopulationSpec::uniform(std::move(agents));
  }
  return out;
}

std::vector<SweepRow> sweep_population(const GameConfig& template_config,
                                       const GraphSequence& seq,
                                       const std::vector<std::size_t>& sizes,
                                       const RunSettings& settings,
                                       const EpsilonOptions& epsilon) {
  const std::size_t L = template_config.num_populations();
  if (L == 0) throw std::invalid_argument("sweep_population: no populations");
  for (std::size_t N : sizes) {
    if (N == 0 || N % L != 0) {
      throw std::invalid_argument("sweep_population: size " + std::to_string(N) +
                                  " is not a positive multiple of L = " + std::to_string(L));
    }
  }
  std::vector<SweepRow> rows(sizes.size());
  RunSettings inner = settings;
  inner.parallel = false;
  auto run_one = [&](std::size_t j) {
    const GameConfig config = resize_populations(template_config, sizes[j] / L);
    const OperatorContext context(config);
    const RunResult result =
        run_algorithm1(context, seq, default_initial_states(config, L, inner), inner);
    const EpsilonReport eps = epsilon_nash_check(result, config, epsilon);
    SweepRow& row = rows[j];
    row.total_agents = sizes[j];
    row.max_epsilon = eps.max_epsilon;
    row.max_deviation_distance = eps.max_deviation_distance;
    row.iterations = result.iterations;
    row.termination = result.termination;
    if (!result.trace.empty()) {
      row.final_consensus = result.trace.back().consensus_residual;
      row.final_fixed_point = result.trace.back().fixed_point_residual;
    }
  };
  if (settings.parallel && sizes.size() > 1) {
    std::vector<std::exception_ptr> errors(sizes.size());
    {
      std::vector<std::jthread> pool;
      for (std::size_t j = 0; j < sizes.size(); ++j) {
        pool.emplace_back([&, j] {
          try {
            run_one(j);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t j = 0; j < sizes.size(); ++j) run_one(j);
  }
  return rows;
}

}  // namespace mpgame
