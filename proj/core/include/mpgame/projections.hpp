#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mpgame/types.hpp"

namespace mpgame {

/// {x : lower <= x <= upper, 1'x = budget}.
struct BoxHyperplaneSet {
  Vector lower;
  Vector upper;
  double budget = 0.0;

  static BoxHyperplaneSet of(const AgentProfile& agent) {
    return {agent.lower, agent.upper, agent.budget};
  }

  Eigen::Index dim() const { return lower.size(); }
  bool feasible() const;
  bool contains(const Vector& x, double tol) const;
};

/// Iterative solver gave up; carries the last residual it saw.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

inline constexpr double kKnapsackBudgetTol = 1e-12;
inline constexpr std::size_t kKnapsackMaxBisections = 200;
inline constexpr std::size_t kGenericMaxIterations = 100000;

/// Componentwise clamp; throws std::invalid_argument on size mismatch or
/// lower > upper.
Vector project_box(const Vector& point, const Vector& lower,
                   const Vector& upper);

struct KnapsackSolution {
  Vector x;
  double multiplier = 0.0;  ///< nu on the budget row
  std::size_t bisections = 0;
};

/// Continuous quadratic knapsack
///   min sum_t quad_t u_t^2 + lin'u  over the box-hyperplane set,
/// quad_t > 0. Bisection on the budget multiplier nu with
/// u_t(nu) = clamp((-lin_t - nu) / (2 quad_t), lower_t, upper_t). Once the
/// bracket holds no breakpoint the affine piece is solved in closed form, so
/// the result is exact up to rounding.
///
/// Throws std::domain_error if the set is empty and std::invalid_argument
/// for non-positive curvature or mismatched sizes.
KnapsackSolution solve_diagonal_knapsack(const Vector& quad, const Vector& lin,
                                         const BoxHyperplaneSet& set);

/// Allocation-free variant of the scalar-curvature knapsack used in the hot
/// loop. `out` must already have the set's dimension. Returns nu.
double solve_knapsack_into(double quad, const Eigen::Ref<const Vector>& lin,
                           const BoxHyperplaneSet& set, Eigen::Ref<Vector> out);
double solve_knapsack_into(double quad, const Eigen::Ref<const Vector>& lin,
                           const Vector& lower, const Vector& upper,
                           double budget, Eigen::Ref<Vector> out);

/// Best response of f(u) = quad * u'u + lin'u over the set.
Vector solve_box_hyperplane_qp(double quad, const Vector& lin,
                               const BoxHyperplaneSet& set);

/// Euclidean projection onto the set.
Vector project_box_hyperplane(const Vector& point, const BoxHyperplaneSet& set);

using GradientFn = std::function<Vector(const Vector&)>;

struct GenericSolveResult {
  Vector x;
  std::vector<double> residuals;  ///< lipschitz * ||x_{j+1} - x_j|| per step
  std::size_t iterations = 0;
};

/// argmin_u f(u) + v'u over the set for a strongly convex f with
/// lipschitz-continuous gradient, by projected gradient with step
/// 1/lipschitz. Stops once the gradient-mapping norm is <= tol; throws
/// NumericalError after kGenericMaxIterations steps.
GenericSolveResult best_response_generic(const GradientFn& f_grad,
                                         double lipschitz, const Vector& v,
                                         const BoxHyperplaneSet& set,
                                         double tol);

}  // namespace mpgame
