#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mpgame/ev_scenario.hpp"
#include "mpgame/projections.hpp"

namespace mpgame {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Minimum of q u'u + c'u on the segment u1 + u2 = budget inside the box,
// scanned with step h.
Vector grid_min_2d(double q, const Vector& c, const BoxHyperplaneSet& s, double h) {
  double best = std::numeric_limits<double>::infinity();
  Vector arg(2);
  const double lo = std::max(s.lower(0), s.budget - s.upper(1));
  const double hi = std::min(s.upper(0), s.budget - s.lower(1));
  for (double u1 = lo; u1 <= hi + 1e-15; u1 += h) {
    const Vector u = vec({u1, s.budget - u1});
    const double f = q * u.squaredNorm() + c.dot(u);
    if (f < best) {
      best = f;
      arg = u;
    }
  }
  return arg;
}

// Exhaustive active-set search: every slot is at its lower bound, its upper
// bound or free; free slots share one multiplier fixed by the budget.
Vector active_set_enumeration(double q, const Vector& c, const BoxHyperplaneSet& s) {
  const auto n = s.dim();
  std::size_t patterns = 1;
  for (Eigen::Index i = 0; i < n; ++i) patterns *= 3;
  double best = std::numeric_limits<double>::infinity();
  Vector arg;
  for (std::size_t code = 0; code < patterns; ++code) {
    Vector u(n);
    std::size_t rest = code;
    double fixed = 0.0, free_c = 0.0;
    int free_count = 0;
    std::vector<int> state(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3);
      rest /= 3;
      if (state[static_cast<std::size_t>(i)] == 0) fixed += s.lower(i);
      if (state[static_cast<std::size_t>(i)] == 1) fixed += s.upper(i);
      if (state[static_cast<std::size_t>(i)] == 2) {
        free_c += c(i);
        ++free_count;
      }
    }
    if (free_count == 0 && std::abs(fixed - s.budget) > 1e-12) continue;
    const double nu = free_count ? -(2 * q * (s.budget - fixed) + free_c) / free_count : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int st = state[static_cast<std::size_t>(i)];
      u(i) = st == 0 ? s.lower(i) : st == 1 ? s.upper(i) : (-c(i) - nu) / (2 * q);
    }
    if (!s.contains(u, 1e-12)) continue;
    const double f = q * u.squaredNorm() + c.dot(u);
    if (f < best) {
      best = f;
      arg = u;
    }
  }
  return arg;
}

TEST(ProjectBox, InteriorPointUnchanged) {
  const Vector p = Vector::Constant(5, 0.05);
  EXPECT_EQ(project_box(p, Vector::Zero(5), Vector::Constant(5, 0.1)), p);
}

TEST(ProjectBox, ClampsActiveBounds) {
  EXPECT_EQ(project_box(vec({-1, 2}), Vector::Zero(2), Vector::Ones(2)), vec({0, 1}));
  EXPECT_EQ(project_box(vec({0.08}), vec({0}), vec({0.04})), vec({0.04}));
}

TEST(ProjectBox, RejectsBadInput) {
  EXPECT_THROW(project_box(Vector::Zero(2), Vector::Zero(3), Vector::Ones(3)),
               std::invalid_argument);
  EXPECT_THROW(project_box(Vector::Zero(1), vec({1}), vec({0})), std::invalid_argument);
}

TEST(Knapsack, HandSolvedTwoDimensional) {
  const BoxHyperplaneSet set{Vector::Zero(2), Vector::Ones(2), 1.0};
  const Vector x = solve_box_hyperplane_qp(0.5, vec({0, -1}), set);
  EXPECT_NEAR(x(0), 0.0, 1e-12);
  EXPECT_NEAR(x(1), 1.0, 1e-12);
}

TEST(Knapsack, SymmetryGivesUniformMidpoint) {
  const BoxHyperplaneSet set{Vector::Constant(6, -1.0), Vector::Constant(6, 3.0), 6.0};
  const Vector x = solve_box_hyperplane_qp(2.0, Vector::Zero(6), set);
  EXPECT_LT((x - Vector::Ones(6)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Knapsack, MatchesActiveSetEnumerationOnEvSlice) {
  const auto params = build_default();
  const Vector lin_full = params.p + params.a * params.d + Vector::Constant(14, params.b);
  const Vector lin = lin_full.head(4);
  const BoxHyperplaneSet set{Vector::Zero(4), Vector::Constant(4, 0.25), 0.8};
  const Vector x = solve_box_hyperplane_qp(params.q, lin, set);
  const Vector ref = active_set_enumeration(params.q, lin, set);
  EXPECT_LT((x - ref).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Knapsack, FullEvProblemSatisfiesKkt) {
  const auto params = build_default();
  const Vector lin = params.p + params.a * params.d + Vector::Constant(14, params.b);
  const BoxHyperplaneSet set{Vector::Zero(14), Vector::Constant(14, 0.25), 0.8};
  const auto sol = solve_diagonal_knapsack(Vector::Constant(14, params.q), lin, set);
  EXPECT_NEAR(sol.x.sum(), 0.8, 1e-12);
  for (Eigen::Index t = 0; t < 14; ++t) {
    const double g = 2 * params.q * sol.x(t) + lin(t) + sol.multiplier;
    if (sol.x(t) > 1e-12 && sol.x(t) < 0.25 - 1e-12) EXPECT_NEAR(g, 0.0, 1e-10);
    if (sol.x(t) <= 1e-12) EXPECT_GE(g, -1e-10);
    if (sol.x(t) >= 0.25 - 1e-12) EXPECT_LE(g, 1e-10);
  }
}

TEST(Knapsack, RandomInstancesAgreeWithGridAndEnumeration) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double q = 0.1 + u(rng);
    const Vector c = vec({u(rng) * 2 - 1, u(rng) * 2 - 1});
    const Vector lo = vec({-u(rng), -u(rng)});
    const Vector hi = vec({u(rng) + 0.2, u(rng) + 0.2});
    const double budget = lo.sum() + u(rng) * (hi.sum() - lo.sum());
    const BoxHyperplaneSet set{lo, hi, budget};
    const Vector x = solve_box_hyperplane_qp(q, c, set);
    EXPECT_LT((x - grid_min_2d(q, c, set, 1e-3)).lpNorm<Eigen::Infinity>(), 2e-3);
    EXPECT_LT((x - active_set_enumeration(q, c, set)).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Knapsack, ErrorCases) {
  const BoxHyperplaneSet empty{Vector::Zero(2), Vector::Ones(2), 3.0};
  EXPECT_THROW(solve_box_hyperplane_qp(1.0, Vector::Zero(2), empty), std::domain_error);
  const BoxHyperplaneSet ok{Vector::Zero(2), Vector::Ones(2), 1.0};
  EXPECT_THROW(solve_box_hyperplane_qp(0.0, Vector::Zero(2), ok), std::invalid_argument);
  EXPECT_THROW(solve_box_hyperplane_qp(-1.0, Vector::Zero(2), ok), std::invalid_argument);
}

TEST(Knapsack, DegenerateSetHasUniquePoint) {
  const BoxHyperplaneSet set{Vector::Zero(3), Vector::Ones(3), 3.0};
  EXPECT_EQ(solve_box_hyperplane_qp(1.0, vec({5, -2, 1}), set), Vector::Ones(3));
}

TEST(ProjectBoxHyperplane, MatchesKnapsackWithShiftedLinearTerm) {
  const BoxHyperplaneSet set{Vector::Zero(3), Vector::Constant(3, 0.6), 1.0};
  const Vector p = vec({0.9, 0.1, -0.4});
  const Vector x = project_box_hyperplane(p, set);
  EXPECT_NEAR(x.sum(), 1.0, 1e-12);
  // Projection: min 0.5|u - p|^2, i.e. quad 0.5 and lin -p.
  EXPECT_LT((x - active_set_enumeration(0.5, -p, set)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(GenericSolver, AgreesWithClosedFormOnRandomInstances) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tol = 1e-10;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 5;
    const double q = 0.2 + u(rng);
    Vector c(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i) = u(rng) - 0.5;
      v(i) = u(rng) - 0.5;
    }
    const BoxHyperplaneSet set{Vector::Zero(n), Vector::Constant(n, 0.5), 1.2};
    const GradientFn grad = [&](const Vector& x) -> Vector { return 2 * q * x + c; };
    const auto res = best_response_generic(grad, 2 * q, v, set, tol);
    const Vector ref = solve_box_hyperplane_qp(q, c + v, set);
    EXPECT_LT((res.x - ref).lpNorm<Eigen::Infinity>(), 10 * tol);
  }
}

TEST(GenericSolver, InteriorMinimumReturned) {
  const BoxHyperplaneSet set{Vector::Zero(2), Vector::Ones(2), 1.0};
  const Vector target = vec({0.3, 0.7});
  const GradientFn grad = [&](const Vector& x) -> Vector { return 2 * (x - target); };
  const auto res = best_response_generic(grad, 2.0, Vector::Zero(2), set, 1e-12);
  EXPECT_LT((res.x - target).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(GenericSolver, ResidualTraceIsMonotone) {
  const BoxHyperplaneSet set{Vector::Zero(2), Vector::Ones(2), 1.0};
  Matrix Q(2, 2);
  Q << 3.0, 1.0, 1.0, 2.0;
  const GradientFn grad = [&](const Vector& x) -> Vector { return 2 * Q * x + vec({-1, 0.5}); };
  const auto res = best_response_generic(grad, 2 * 3.62, Vector::Zero(2), set, 1e-10);
  ASSERT_GT(res.residuals.size(), 1u);
  for (std::size_t j = 1; j < res.residuals.size(); ++j) {
    EXPECT_LE(res.residuals[j], res.residuals[j - 1] + 1e-14);
  }
}

}  // namespace
}  // namespace mpgame
