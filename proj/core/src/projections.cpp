#include "mpgame/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mpgame {
namespace {

void check_bounds(const Vector& lower, const Vector& upper, double budget,
                  Eigen::Index n) {
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("knapsack: dimension mismatch");
  }
  if ((lower.array() > upper.array()).any() || lower.sum() > budget ||
      budget > upper.sum()) {
    std::ostringstream msg;
    msg << "knapsack: empty feasible set (sum lower " << lower.sum()
        << ", budget " << budget << ", sum upper " << upper.sum() << ")";
    throw std::domain_error(msg.str());
  }
}

void check_set(const BoxHyperplaneSet& set, Eigen::Index n) {
  check_bounds(set.lower, set.upper, set.budget, n);
}

// `curvature(t)` returns 2*quad_t, the second derivative in coordinate t.
template <class Curvature>
double knapsack_impl(const Curvature& curvature,
                     const Eigen::Ref<const Vector>& lin, const Vector& lo,
                     const Vector& hi, double budget, Eigen::Ref<Vector> out,
                     std::size_t* bisections) {
  const Eigen::Index n = lin.size();

  const double sum_lo = lo.sum();
  const double sum_hi = hi.sum();
  // Breakpoints: u_t sits at upper for nu <= up_t and at lower for nu >= down_t.
  double a = std::numeric_limits<double>::infinity();
  double b = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    const double h = curvature(t);
    a = std::min(a, -lin(t) - h * hi(t));
    b = std::max(b, -lin(t) - h * lo(t));
  }

  if (budget <= sum_lo) {
    out = lo;
    return b;
  }
  if (budget >= sum_hi) {
    out = hi;
    return a;
  }

  auto value = [&](Eigen::Index t, double nu) {
    return std::clamp((-lin(t) - nu) / curvature(t), lo(t), hi(t));
  };
  auto fill = [&](double nu) {
    for (Eigen::Index t = 0; t < n; ++t) out(t) = value(t, nu);
  };

  // S(nu) is non-increasing with S(a) = sum_hi > budget > sum_lo = S(b).
  std::size_t iter = 0;
  for (; iter < kKnapsackMaxBisections; ++iter) {
    // Closed form once (a, b) contains no breakpoint.
    bool clean = true;
    double free_num = 0.0;
    double free_den = 0.0;
    double fixed_sum = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double h = curvature(t);
      const double up = -lin(t) - h * hi(t);
      const double down = -lin(t) - h * lo(t);
      if ((up > a && up < b) || (down > a && down < b)) {
        clean = false;
        break;
      }
      if (up <= a && down >= b) {
        free_num += -lin(t) / h;
        free_den += 1.0 / h;
      } else {
        fixed_sum += (down <= a) ? lo(t) : hi(t);
      }
    }
    if (clean && free_den > 0.0) {
      const double nu = std::clamp((free_num - (budget - fixed_sum)) / free_den, a, b);
      fill(nu);
      if (bisections) *bisections = iter;
      return nu;
    }

    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) sum += value(t, mid);
    if (std::abs(sum - budget) <= kKnapsackBudgetTol) {
      fill(mid);
      if (bisections) *bisections = iter + 1;
      return mid;
    }
    if (sum > budget) {
      a = mid;
    } else {
      b = mid;
    }
  }
  const double nu = 0.5 * (a + b);
  fill(nu);
  if (bisections) *bisections = iter;
  const double residual = std::abs(out.sum() - budget);
  if (residual > 1e-9) {
    throw NumericalError("knapsack: bisection cap reached", residual);
  }
  return nu;
}

}  // namespace

bool BoxHyperplaneSet::feasible() const {
  return lower.size() == upper.size() &&
         (lower.array() <= upper.array()).all() && lower.sum() <= budget &&
         budget <= upper.sum();
}

bool BoxHyperplaneSet::contains(const Vector& x, double tol) const {
  return x.size() == lower.size() &&
         (x.array() >= lower.array() - tol).all() &&
         (x.array() <= upper.array() + tol).all() &&
         std::abs(x.sum() - budget) <= tol;
}

Vector project_box(const Vector& point, const Vector& lower,
                   const Vector& upper) {
  if (point.size() != lower.size() || point.size() != upper.size()) {
    throw std::invalid_argument("project_box: dimension mismatch");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("project_box: lower > upper");
  }
  return point.cwiseMax(lower).cwiseMin(upper);
}

KnapsackSolution solve_diagonal_knapsack(const Vector& quad, const Vector& lin,
                                         const BoxHyperplaneSet& set) {
  if (quad.size() != lin.size()) {
    throw std::invalid_argument("knapsack: quad/lin size mismatch");
  }
  if (quad.size() == 0 || (quad.array() <= 0.0).any()) {
    throw std::invalid_argument("knapsack: curvature must be positive");
  }
  check_set(set, lin.size());
  KnapsackSolution sol;
  sol.x.resize(lin.size());
  sol.multiplier = knapsack_impl([&](Eigen::Index t) { return 2.0 * quad(t); },
                                 lin, set.lower, set.upper, set.budget, sol.x,
                                 &sol.bisections);
  return sol;
}

double solve_knapsack_into(double quad, const Eigen::Ref<const Vector>& lin,
                           const Vector& lower, const Vector& upper,
                           double budget, Eigen::Ref<Vector> out) {
  if (!(quad > 0.0)) {
    throw std::invalid_argument("knapsack: quad must be positive");
  }
  check_bounds(lower, upper, budget, lin.size());
  const double h = 2.0 * quad;
  return knapsack_impl([h](Eigen::Index) { return h; }, lin, lower, upper,
                       budget, out, nullptr);
}

double solve_knapsack_into(double quad, const Eigen::Ref<const Vector>& lin,
                           const BoxHyperplaneSet& set, Eigen::Ref<Vector> out) {
  return solve_knapsack_into(quad, lin, set.lower, set.upper, set.budget, out);
}

Vector solve_box_hyperplane_qp(double quad, const Vector& lin,
                               const BoxHyperplaneSet& set) {
  Vector out(lin.size());
  solve_knapsack_into(quad, lin, set, out);
  return out;
}

Vector project_box_hyperplane(const Vector& point, const BoxHyperplaneSet& set) {
  return solve_box_hyperplane_qp(0.5, -point, set);
}

GenericSolveResult best_response_generic(const GradientFn& f_grad,
                                         double lipschitz, const Vector& v,
                                         const BoxHyperplaneSet& set,
                                         double tol) {
  if (!(lipschitz > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument(
        "best_response_generic: lipschitz and tol must be positive");
  }
  if (v.size() != set.dim()) {
    throw std::invalid_argument("best_response_generic: dimension mismatch");
  }
  check_set(set, v.size());

  GenericSolveResult result;
  Vector x = project_box_hyperplane(0.5 * (set.lower + set.upper), set);
  const double step = 1.0 / lipschitz;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < kGenericMaxIterations; ++j) {
    const Vector grad = f_grad(x) + v;
    Vector next = project_box_hyperplane(x - step * grad, set);
    residual = lipschitz * (next - x).norm();
    result.residuals.push_back(residual);
    x = std::move(next);
    if (residual <= tol) {
      result.x = std::move(x);
      result.iterations = j + 1;
      return result;
    }
  }
  throw NumericalError("best_response_generic: iteration cap reached", residual);
}

}  // namespace mpgame
