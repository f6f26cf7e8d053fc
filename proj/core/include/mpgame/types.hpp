#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "mpgame/schedule.hpp"

namespace mpgame {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Stacked coordinator signal y = col(sigma, lambda).
///
/// sigma is the running estimate of the population-weighted aggregate,
/// lambda the estimate of the coupling price. Both halves always have the
/// same dimension n >= 1 and finite entries; the constructors enforce that.
class IncentiveState {
 public:
  IncentiveState() = default;
  IncentiveState(Vector sigma, Vector lambda);

  /// Splits a 2n stacked vector into its halves.
  static IncentiveState from_stacked(const Vector& stacked);
  static IncentiveState zeros(Eigen::Index n);

  Vector stacked() const;

  const Vector& sigma() const { return sigma_; }
  const Vector& lambda() const { return lambda_; }
  Eigen::Index dim() const { return sigma_.size(); }

 private:
  Vector sigma_;
  Vector lambda_;
};

/// One agent's cost f(x) = quad * x'x + lin'x over
/// {lower <= x <= upper, 1'x = budget}.
///
/// Kept as a plain aggregate so that infeasible profiles can be represented
/// and reported by validate_game rather than rejected on construction.
struct AgentProfile {
  double quad = 1.0;
  Vector lin;
  Vector lower;
  Vector upper;
  double budget = 0.0;

  Eigen::Index dim() const { return lin.size(); }
  bool bounds_ordered() const;
  bool budget_feasible() const;
  double cost(const Vector& x) const;
};

struct PopulationSpec {
  std::vector<AgentProfile> agents;
  Vector delta;

  /// Population with uniform weights 1/N.
  static PopulationSpec uniform(std::vector<AgentProfile> agents);

  std::size_t size() const { return agents.size(); }
};

struct GameConfig {
  Matrix C;
  Matrix K;
  double eta = 0.1;
  Vector coupling_lower;
  Vector coupling_upper;
  std::vector<PopulationSpec> populations;
  StepSchedule schedule;

  Eigen::Index dim() const { return C.rows(); }
  std::size_t num_populations() const { return populations.size(); }
  std::size_t num_agents() const;
};

/// Pass/fail report produced by the validators. Failing checks never throw;
/// callers inspect ok() and decide.
struct ValidationReport {
  enum class Severity { kError, kWarning };

  struct Check {
    std::string name;
    bool passed = true;
    Severity severity = Severity::kError;
    std::string detail;
  };

  std::vector<Check> checks;

  void add(std::string name, bool passed, std::string detail = {},
           Severity severity = Severity::kError);
  /// True when every error-severity check passed. Warnings do not count.
  bool ok() const;
  const Check* find(const std::string& name) const;
  std::string summary() const;
};

struct IterationRecord {
  std::size_t k = 0;
  double alpha = 0.0;
  double consensus_residual = 0.0;
  double fixed_point_residual = 0.0;
  double perturbation_pnorm = 0.0;
  double constraint_violation = 0.0;
  double elapsed_ms = 0.0;
};

/// Recorded diagnostics, one record per sampled iteration. Records are
/// strictly increasing in k with a constant stride (the run's record_every).
class IterationTrace {
 public:
  IterationTrace() = default;
  explicit IterationTrace(std::size_t stride) : stride_(stride) {}

  void push(const IterationRecord& record);

  const std::vector<IterationRecord>& records() const { return records_; }
  std::size_t stride() const { return stride_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const IterationRecord& back() const { return records_.back(); }

 private:
  std::size_t stride_ = 1;
  std::vector<IterationRecord> records_;
};

double max_abs(const Vector& v);

}  // namespace mpgame
