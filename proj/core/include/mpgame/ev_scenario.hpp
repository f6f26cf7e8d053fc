#pragma once

#include <cstddef>
#include <cstdint>

#include "mpgame/types.hpp"

namespace mpgame {

/// EV charging instance. Each vehicle pays
///   q x'x + p'x + (a (sigma + d) + b 1)'x
/// for a charging profile x with x_lower <= x <= x_upper and 1'x = beta,
/// and the population-average demand must stay below caps.
struct EvScenarioParams {
  std::size_t n = 14;
  std::size_t L = 10;
  std::size_t agents_per_population = 50;
  double q = 0.004;
  Vector p;
  double a = 0.038;
  double b = 0.06;
  Vector d;
  Vector x_lower;
  Vector x_upper;
  double beta_min = 0.6;
  double beta_max = 1.0;
  Vector caps;
  std::uint64_t seed = 42;

  /// Price weight scale, K = k_scale * I.
  double k_scale = 0.08;
  double eta = 0.07;
  StepSchedule schedule = StepSchedule::harmonic(2000.0, 1100.0);

  /// Throws std::invalid_argument when vector lengths disagree with n or the
  /// budget range cannot meet the bounds.
  void validate() const;
};

inline constexpr std::size_t kPaperAgentsPerPopulation = 1000;
inline constexpr std::size_t kBetaRetries = 100;

/// Normalized two-peak daily demand used when no profile is supplied.
Vector default_demand_profile();

/// Default caps: 0.04 in slots 1-3 and 11-14, 0.1 elsewhere.
Vector default_caps();

/// The default instance; 50 vehicles per population, or 1000 with
/// paper_scale.
EvScenarioParams build_default(bool paper_scale = false);

/// Canonical game: C = a I, K = k_scale I (or `K` when non-empty), agent
/// linear term p + a d + b 1, coupling box [0, caps], uniform delta.
/// Budgets are drawn uniformly from [beta_min, beta_max] with a generator
/// seeded by params.seed; a draw outside the reachable range is redrawn,
/// and kBetaRetries consecutive failures throw std::runtime_error.
GameConfig to_canonical(const EvScenarioParams& params, const Matrix& K = Matrix());

/// Cost of a vehicle profile under the original scenario parametrization,
/// for checking the canonical mapping.
double ev_cost(const EvScenarioParams& params, double quad, const Vector& x,
               const Vector& sigma);

}  // namespace mpgame
