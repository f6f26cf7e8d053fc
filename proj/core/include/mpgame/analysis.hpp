#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mpgame/engine.hpp"

namespace mpgame {

struct AgentId {
  std::size_t population = 0;
  std::size_t agent = 0;
  friend bool operator==(const AgentId&, const AgentId&) = default;
};

struct DeviationGain {
  AgentId id;
  double equilibrium_cost = 0.0;
  double deviation_cost = 0.0;
  /// equilibrium_cost - deviation_cost before clipping; rounding can push it
  /// slightly below zero.
  double raw_gain = 0.0;
  double gain = 0.0;  ///< max(raw_gain, 0)
  double deviation_distance = 0.0;  ///< ||r* - x_hat||_inf
};

struct EpsilonOptions {
  std::size_t sample = 100;
  std::uint64_t seed = 42;
  /// Lipschitz constant of the aggregate map; enables theoretical_bound.
  std::optional<double> lipschitz;
  /// Tolerance of the generic solver used when C is not diagonal.
  double generic_tol = 1e-12;
};

struct EpsilonReport {
  std::vector<DeviationGain> gains;  ///< one entry per sampled agent
  double max_epsilon = 0.0;
  double max_raw_gain = 0.0;
  double max_deviation_distance = 0.0;
  /// Number of distinct deviation problems actually solved after merging
  /// sampled agents with identical profiles in the same population.
  std::size_t distinct_problems = 0;
  /// 2 alpha (||C|| + 1) R delta_bar / N when a Lipschitz constant is given.
  std::optional<double> theoretical_bound;
};

/// Unilateral-deviation check at a computed equilibrium.
///
/// The equilibrium profile is result.final_strategies; sigma_hat is
/// recomputed from it and lambda_hat is the coordinators' average price,
/// held fixed. For each sampled agent (population l, weight w = delta_i / L)
/// the deviation problem is
///   min_r q r'r + w r'C r + (lin + C sigma_minus + K lambda_hat)'r
/// over the agent's own set, with sigma_minus = sigma_hat - w x_hat. The gain
/// is the cost of x_hat minus the optimal value.
EpsilonReport epsilon_nash_check(const RunResult& result, const GameConfig& config,
                                 const EpsilonOptions& options = {});

/// Aggregate sigma_hat = (1/L) sum_l sum_i delta_i x_i of a strategy profile.
Vector profile_aggregate(const GameConfig& config,
                         const std::vector<std::vector<Vector>>& strategies);

struct ComparisonOptions {
  /// Settings for the reference solve of the fixed point; the reference
  /// uses its own eta and schedule (fixed points of T do not depend on eta).
  RunSettings reference_settings;
  double reference_eta = 0.05;
  StepSchedule reference_schedule = StepSchedule::harmonic(1e7, 0.9e7);

  ComparisonOptions() {
    reference_settings.max_iterations = 200000;
    reference_settings.stop_fixed_point_tol = 1e-13;
  }
};

struct GapPoint {
  std::size_t k = 0;
  double gap = 0.0;  ///< ||ybar^k - y_oracle^k||_inf
};

struct ComparisonReport {
  RunResult algorithm;
  RunResult oracle;     ///< same schedule, run in lockstep with algorithm
  RunResult reference;  ///< tightly converged centralized solve
  std::vector<GapPoint> gaps;
  /// ||ybar^K - y_hat||_inf against the reference fixed point.
  double terminal_gap = 0.0;
  /// ||ybar^K - y_oracle^K||_inf.
  double lockstep_terminal_gap = 0.0;
};

/// Runs Algorithm 1 and the centralized oracle from matched initial states
/// (the oracle starts at the mean of the coordinators' states, and for the
/// same number of iterations), and a reference solve for y_hat.
ComparisonReport compare_with_oracle(const GameConfig& config, const GraphSequence& seq,
                                     const RunSettings& settings,
                                     const ComparisonOptions& options = {});

struct AblationReport {
  RunResult constrained;
  RunResult unconstrained;
  /// Per slot max(0, sigma_bar_t - upper_t) of the coordinators' average.
  Vector constrained_violation;
  Vector unconstrained_violation;
  /// Same, for the load actually produced by the final strategies.
  Vector constrained_load_violation;
  Vector unconstrained_load_violation;
};

/// Same pipeline with and without the coupling price (lambda pinned at 0),
/// from the same initial states.
AblationReport ablation_no_coupling(const GameConfig& config, const GraphSequence& seq,
                                    const RunSettings& settings);

struct SweepRow {
  std::size_t total_agents = 0;
  double max_epsilon = 0.0;
  double max_deviation_distance = 0.0;
  std::size_t iterations = 0;
  Termination termination = Termination::kMaxIterations;
  double final_consensus = 0.0;
  double final_fixed_point = 0.0;
};

/// Population-size sweep. For each total size N (a multiple of L) every
/// population l keeps N/L agents taken cyclically from the template's
/// population l, with uniform delta; the run uses `seq` and the result goes
/// through epsilon_nash_check. Rows come back in the order of `sizes`.
std::vector<SweepRow> sweep_population(const GameConfig& template_config,
                                       const GraphSequence& seq,
                                       const std::vector<std::size_t>& sizes,
                                       const RunSettings& settings,
                                       const EpsilonOptions& epsilon = {});

/// The template with each population resized to per_population agents.
GameConfig resize_populations(const GameConfig& template_config,
                              std::size_t per_population);

}  // namespace mpgame
