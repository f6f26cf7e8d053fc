#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mpgame/projections.hpp"
#include "mpgame/types.hpp"

namespace mpgame {

/// Immutable, shareable precomputation for one GameConfig: the resolvent
/// B = (I + eta M)^-1 with M = [[I, 0], [I, 0]] and the metric P.
///
/// M is idempotent, so B = I - eta/(1+eta) M and is applied in O(n).
class OperatorContext {
 public:
  explicit OperatorContext(std::shared_ptr<const GameConfig> config);
  explicit OperatorContext(GameConfig config);

  const GameConfig& config() const { return *config_; }
  std::shared_ptr<const GameConfig> shared_config() const { return config_; }
  Eigen::Index dim() const { return config_->dim(); }
  double eta() const { return config_->eta; }

  /// Dense 2n x 2n copies for diagnostics and tests.
  const Matrix& resolvent() const { return resolvent_; }
  const Matrix& pmatrix() const { return pmatrix_; }
  static Matrix monotone_part(Eigen::Index n);

  /// B * z without forming B.
  Vector apply_resolvent(const Vector& z) const;

  /// Induced infinity norms of B: max column sum and max row sum.
  double resolvent_column_norm() const;
  double resolvent_row_norm() const;

 private:
  std::shared_ptr<const GameConfig> config_;
  Matrix resolvent_;
  Matrix pmatrix_;
};

/// Thrown when an agent subproblem fails; locates the agent.
class AgentSolveError : public std::runtime_error {
 public:
  AgentSolveError(const std::string& what, std::size_t population,
                  std::size_t agent)
      : std::runtime_error(what), population_(population), agent_(agent) {}
  std::size_t population() const { return population_; }
  std::size_t agent() const { return agent_; }

 private:
  std::size_t population_;
  std::size_t agent_;
};

/// v = C sigma + K lambda.
Vector incentive(const IncentiveState& y, const GameConfig& config);

/// Best response of one agent to the incentive v.
Vector best_response(const AgentProfile& agent, const Vector& v);

/// Every agent's best response to v, in agent order.
std::vector<Vector> best_responses(const PopulationSpec& pop, const Vector& v,
                                   std::size_t population_index = 0);

/// sum_i delta_i x_i*(v). `population_index` only labels errors.
Vector aggregate_local(const PopulationSpec& pop, const Vector& v,
                       std::size_t population_index = 0);

/// argmin_{z in C} 0.5 z'z + (K(sigma - lambda))'z, i.e. the box projection
/// of -K(sigma - lambda).
Vector x_star_star(const IncentiveState& y, const OperatorContext& context);

/// -col(A_l, 2 A_l - x**).
Vector gamma_local(const Vector& pop_aggregate, const Vector& xss);

/// Pieces of one local operator evaluation, kept for diagnostics.
struct LocalEvaluation {
  IncentiveState value;  ///< T_l(y)
  Vector aggregate;      ///< A_l(y)
  Vector xss;            ///< x**(y)
};

LocalEvaluation evaluate_T_local(const IncentiveState& y, std::size_t population,
                                 const OperatorContext& context);

/// T_l(y) = B (y - eta Gamma_l(y)).
IncentiveState apply_T_local(const IncentiveState& y, std::size_t population,
                             const OperatorContext& context);

/// Same, for a population that is not part of context.config().
IncentiveState apply_T_local(const IncentiveState& y, const PopulationSpec& pop,
                             const OperatorContext& context);

/// T(y) = (1/L) sum_l T_l(y), summed in population order.
IncentiveState apply_T_global(const IncentiveState& y,
                              const OperatorContext& context);

/// Global aggregate A(y) = (1/L) sum_l A_l(y).
Vector aggregate_global(const IncentiveState& y, const OperatorContext& context);

/// sqrt(w' P w) for a stacked 2n vector.
double p_norm(const Vector& w, const OperatorContext& context);

/// Result of the sampled P-norm non-expansiveness probe of T.
struct NonexpansivenessProbe {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;  ///< max of ||T y - T y'||_P - ||y - y'||_P
  double worst_ratio = 0.0;   ///< max of ||T y - T y'||_P / ||y - y'||_P
  bool passed() const { return violations == 0; }
};

struct ProbeOptions {
  std::size_t pairs = 1000;
  std::uint64_t seed = 42;
  double slack = 1e-7;
  /// lambda samples are drawn from [-lambda_range, lambda_range]^n.
  double lambda_range = 2.0;
  /// Half of the pairs are local: y' = y + local_scale * noise.
  double local_scale = 1e-3;
};

/// Draws pairs with sigma in the coupling box and lambda in a symmetric range;
/// half far apart, half close together (where a stiff operator is most
/// likely to expand).
NonexpansivenessProbe probe_nonexpansive(const OperatorContext& context,
                                         const ProbeOptions& options = {});

struct EtaProbeResult {
  double eta = 0.0;  ///< largest eta found that passes
  std::size_t bisections = 0;
  NonexpansivenessProbe at_eta;
};

/// Bisects eta in (0, eta_max] for the largest value passing the probe.
/// Returns eta = 0 when even eta_min fails.
EtaProbeResult probe_eta(const GameConfig& config, const ProbeOptions& options,
                         double eta_min = 1e-4, double eta_max = 10.0,
                         std::size_t bisections = 30);

/// Residual of the averaging identity (1/L) sum x**(y_l) = x**(mean y_l).
double xss_average_residual(std::span<const IncentiveState> states,
                            const OperatorContext& context);

}  // namespace mpgame
