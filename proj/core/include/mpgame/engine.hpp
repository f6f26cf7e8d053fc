#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mpgame/mappings.hpp"
#include "mpgame/network.hpp"
#include "mpgame/types.hpp"

namespace mpgame {

struct RunSettings {
  std::size_t max_iterations = 100000;
  double stop_consensus_tol = 1e-6;
  double stop_fixed_point_tol = 1e-6;
  /// Diagnostics (and the stopping test) are evaluated every record_every
  /// iterations; each evaluation costs one extra application of T.
  std::size_t record_every = 1;
  std::uint64_t seed = 42;
  bool parallel = false;
  /// Worker count when parallel; 0 picks std::thread::hardware_concurrency.
  std::size_t threads = 0;
  /// Half-width of the seeded uniform perturbation added to the default
  /// initial states; 0 keeps every coordinator at the same start.
  double init_perturbation = 0.0;

  /// Throws std::invalid_argument on non-positive tolerances or counts.
  void validate() const;
};

enum class Termination { kConverged, kMaxIterations };

const char* to_string(Termination termination);

struct RunResult {
  std::vector<IncentiveState> final_states;
  IncentiveState average_state;
  /// [population][agent] best responses to each coordinator's final incentive.
  std::vector<std::vector<Vector>> final_strategies;
  IterationTrace trace;
  Termination termination = Termination::kMaxIterations;
  /// Number of updates performed; final_states are y^iterations.
  std::size_t iterations = 0;
};

/// Called with the iterate y^k of every coordinator, for k = 0 (the
/// initialization) through the final iterate.
using IterateObserver =
    std::function<void(std::size_t k, std::span<const IncentiveState> states)>;

/// Solver failure inside a run; keeps the iteration and agent location.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::size_t iteration, std::size_t population,
           std::size_t agent)
      : std::runtime_error(what),
        iteration_(iteration),
        population_(population),
        agent_(agent) {}
  std::size_t iteration() const { return iteration_; }
  std::size_t population() const { return population_; }
  std::size_t agent() const { return agent_; }

 private:
  std::size_t iteration_;
  std::size_t population_;
  std::size_t agent_;
};

/// sigma at the midpoint of the coupling box, lambda = 0, optionally
/// perturbed (sigma stays inside the box).
std::vector<IncentiveState> default_initial_states(const GameConfig& config,
                                                   std::size_t count,
                                                   const RunSettings& settings);

/// Consensus + Krasnoselskii-Mann iteration
///   y_l <- (1 - alpha_k) sum_l' w_ll'^k y_l' + alpha_k T_l(y_l).
///
/// One coordinator per population. Stops when, at a recorded iteration,
/// both the consensus residual and the fixed-point residual of the average
/// are within tolerance. Results do not depend on settings.parallel.
RunResult run_algorithm1(const OperatorContext& context, const GraphSequence& seq,
                         std::vector<IncentiveState> init, const RunSettings& settings,
                         const IterateObserver& observer = {});

/// Centralized iteration y <- (1 - alpha_k) y + alpha_k T(y).
RunResult run_oracle(const OperatorContext& context, IncentiveState init,
                     const RunSettings& settings, const IterateObserver& observer = {});

/// Algorithm 1 with lambda pinned at 0 after every update, so the coupling
/// price never forms and x** never feeds back.
RunResult run_no_coupling(const OperatorContext& context, const GraphSequence& seq,
                          std::vector<IncentiveState> init, const RunSettings& settings,
                          const IterateObserver& observer = {});

/// Arithmetic mean of the stacked states.
IncentiveState average_state(std::span<const IncentiveState> states);

/// max_l ||y_l - mean||_inf. Throws std::invalid_argument on an empty list.
double consensus_residual(std::span<const IncentiveState> states);

/// ||(1/L) sum_l T_l(y_l) - T(mean y)||_P.
double perturbation_pnorm(std::span<const IncentiveState> states,
                          const OperatorContext& context);

/// max_t max(0, sigma_t - upper_t).
double constraint_violation(const Vector& sigma, const Vector& upper);

/// Per-slot max(0, sigma_t - upper_t).
Vector slot_violations(const Vector& sigma, const Vector& upper);

/// Sum of alpha_k * perturbation_pnorm over the records, split at the
/// middle record.
struct PerturbationSums {
  double total = 0.0;
  double tail = 0.0;
  double tail_fraction() const { return total > 0.0 ? tail / total : 0.0; }
};
PerturbationSums perturbation_sums(const IterationTrace& trace);

void write_trace_csv(const IterationTrace& trace, std::ostream& out);

}  // namespace mpgame
