// Acceptance run on the desk-scale EV instance (L=10, 50 vehicles per
// population, n=14, seed 42). One PASS/FAIL line per criterion; exits 1 if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mpgame/analysis.hpp"
#include "mpgame/config_io.hpp"
#include "mpgame/engine.hpp"
#include "mpgame/ev_scenario.hpp"
#include "mpgame/mappings.hpp"
#include "mpgame/network.hpp"

using namespace mpgame;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %-32s %7.2fs (limit %gs)  %s%s\n", pass ? "PASS" : "FAIL", id, name,
              secs, budget_s, out.detail.c_str(), in_time ? "" : "  [over time]");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

int main() {
  const EvScenarioParams params = build_default();
  const ConfigDocument desk = scenario_document(params);
  const GameConfig& game = desk.game;
  const std::size_t L = game.num_populations();
  const GraphSequence path = GraphSequence::path(L);
  RunSettings settings = desk.run;
  settings.record_every = 1;

  std::printf("desk instance: L=%zu, %zu vehicles/population, n=%lld, eta=%g, seed %llu\n", L,
              game.populations[0].size(), static_cast<long long>(game.dim()), game.eta,
              static_cast<unsigned long long>(params.seed));
  std::printf("stopping rule: consensus <= %g and fixed point <= %g, at most %zu iterations\n\n",
              settings.stop_consensus_tol, settings.stop_fixed_point_tol,
              settings.max_iterations);

  criterion(1, "resolvent exactness", 1.0, [&] {
    double worst = 0.0;
    for (double eta : {0.01, 0.1, 1.0, 10.0}) {
      GameConfig g = game;
      g.eta = eta;
      const OperatorContext ctx(g);
      const auto n = g.dim();
      const Matrix I = Matrix::Identity(2 * n, 2 * n);
      const Matrix prod = (I + eta * OperatorContext::monotone_part(n)) * ctx.resolvent();
      worst = std::max(worst, (prod - I).lpNorm<Eigen::Infinity>());
    }
    return Outcome{worst <= 1e-12, fmt("max |(I+eta M)B - I| = %.2e (tol 1e-12)", worst)};
  });

  criterion(2, "QP oracle equivalence", 10.0, [&] {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_grid = 0.0, worst_generic = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const double q = 0.05 + u(rng);
      const Vector c = vec2(u(rng) - 0.5, u(rng) - 0.5);
      const Vector lo = vec2(-0.5 * u(rng), -0.5 * u(rng));
      const Vector hi = vec2(0.1 + u(rng), 0.1 + u(rng));
      const double budget = lo.sum() + (0.05 + 0.9 * u(rng)) * (hi.sum() - lo.sum());
      const BoxHyperplaneSet set{lo, hi, budget};
      const Vector x = solve_box_hyperplane_qp(q, c, set);

      // Dense grid along the feasible segment, step 1e-3.
      double best = std::numeric_limits<double>::infinity();
      Vector arg(2);
      const double a = std::max(lo(0), budget - hi(1));
      const double b = std::min(hi(0), budget - lo(1));
      const auto steps = static_cast<long>((b - a) / 1e-3);
      for (long s = 0; s <= steps + 1; ++s) {
        const double u1 = std::min(a + 1e-3 * static_cast<double>(s), b);
        const Vector p = vec2(u1, budget - u1);
        const double f = q * p.squaredNorm() + c.dot(p);
        if (f < best) {
          best = f;
          arg = p;
        }
      }
      worst_grid = std::max(worst_grid, (x - arg).lpNorm<Eigen::Infinity>());

      const GradientFn grad = [&](const Vector& z) -> Vector { return 2 * q * z; };
      const auto gen = best_response_generic(grad, 2 * q, c, set, 1e-10);
      worst_generic = std::max(worst_generic, (x - gen.x).lpNorm<Eigen::Infinity>());
    }
    return Outcome{worst_grid <= 2e-3 && worst_generic <= 1e-6,
                   fmt("200 instances: grid gap %.2e (tol 2e-3), generic gap %.2e (tol 1e-6)",
                       worst_grid, worst_generic)};
  });

  criterion(3, "centralized reduction (L=1)", 5.0, [&] {
    EvScenarioParams one = params;
    one.L = 1;
    const GameConfig g = to_canonical(one);
    const OperatorContext ctx(g);
    RunSettings s = settings;
    s.max_iterations = 500;
    s.stop_consensus_tol = std::numeric_limits<double>::min();
    s.stop_fixed_point_tol = std::numeric_limits<double>::min();
    const auto init = default_initial_states(g, 1, s);
    std::vector<Vector> a, b;
    run_algorithm1(ctx, GraphSequence::complete(1), init, s,
                   [&](std::size_t, std::span<const IncentiveState> y) { a.push_back(y[0].stacked()); });
    run_oracle(ctx, init[0], s,
               [&](std::size_t, std::span<const IncentiveState> y) { b.push_back(y[0].stacked()); });
    double worst = a.size() == b.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
      worst = std::max(worst, (a[k] - b[k]).lpNorm<Eigen::Infinity>());
    }
    return Outcome{worst <= 1e-14 && a.size() == 501,
                   fmt("%zu iterates compared, max difference %.2e (tol 1e-14)", a.size(), worst)};
  });

  RunResult desk_run;
  criterion(4, "consensus on path graph", 60.0, [&] {
    desk_run = run_algorithm1(OperatorContext(game), path, default_initial_states(game, L, settings),
                              settings);
    const auto& rec = desk_run.trace.records();
    std::size_t first = rec.size(), sustained = rec.size();
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (rec[i].consensus_residual < 1e-3) {
        if (first == rec.size()) first = i;
        if (sustained == rec.size()) sustained = i;
      } else {
        sustained = rec.size();
      }
    }
    const std::size_t k_first = first < rec.size() ? rec[first].k : 0;
    const std::size_t k_sust = sustained < rec.size() ? rec[sustained].k : 0;
    const bool ok = sustained < rec.size() && k_sust <= 2000;
    return Outcome{ok, fmt("residual < 1e-3 first at k=%zu, from k=%zu on (limit 2000); run %s "
                           "after %zu iterations",
                           k_first, k_sust, to_string(desk_run.termination),
                           desk_run.iterations)};
  });

  criterion(5, "agreement with oracle fixed point", 60.0, [&] {
    const auto report = compare_with_oracle(game, path, settings);
    return Outcome{report.terminal_gap < 1e-3,
                   fmt("|ybar - y_hat|_inf = %.2e (tol 1e-3); reference %s in %zu iterations, "
                       "lockstep oracle gap %.2e",
                       report.terminal_gap, to_string(report.reference.termination),
                       report.reference.iterations, report.lockstep_terminal_gap)};
  });

  criterion(6, "constraint enforcement + ablation", 90.0, [&] {
    const auto report = ablation_no_coupling(game, path, settings);
    const double with = report.constrained_violation.maxCoeff();
    double without_capped = 0.0;
    std::string slots;
    for (Eigen::Index t = 0; t < game.dim(); ++t) {
      const double v = report.unconstrained_violation(t);
      if (v > 1e-3) slots += fmt(" %lld", static_cast<long long>(t + 1));
      if (game.coupling_upper(t) < params.caps.maxCoeff()) without_capped = std::max(without_capped, v);
    }
    const bool converged = report.constrained.termination == Termination::kConverged;
    return Outcome{converged && with <= 1e-3 && without_capped > 1e-3,
                   fmt("coupled (%s) max violation %.2e (tol 1e-3); uncoupled max violation on "
                       "capped slots %.2e, slots over 1e-3:%s",
                       to_string(report.constrained.termination), with, without_capped,
                       slots.empty() ? " none" : slots.c_str())};
  });

  criterion(7, "epsilon-Nash scaling", 300.0, [&] {
    EpsilonOptions eps;
    eps.seed = params.seed;
    const auto rows = sweep_population(game, path, {100, 200, 400}, settings, eps);
    bool decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      decreasing = decreasing && rows[i].max_epsilon < rows[i - 1].max_epsilon;
    }
    const double ratio = rows[2].max_epsilon / rows[0].max_epsilon;
    return Outcome{decreasing && ratio >= 0.125 && ratio <= 0.5,
                   fmt("eps(100)=%.3e eps(200)=%.3e eps(400)=%.3e, %s, ratio %.4f (need "
                       "[0.125, 0.5])",
                       rows[0].max_epsilon, rows[1].max_epsilon, rows[2].max_epsilon,
                       decreasing ? "strictly decreasing" : "not decreasing", ratio)};
  });

  criterion(8, "perturbation summability", 1.0, [&] {
    const auto sums = perturbation_sums(desk_run.trace);
    const bool converged = desk_run.termination == Termination::kConverged;
    return Outcome{converged && sums.tail_fraction() < 0.1,
                   fmt("sum alpha|E|_P = %.4e, last-half share %.2e (limit 0.1)", sums.total,
                       sums.tail_fraction())};
  });

  criterion(9, "non-expansiveness probe", 10.0, [&] {
    ProbeOptions search;
    search.pairs = 200;
    search.seed = params.seed;
    const auto probed = probe_eta(game, search, 1e-3, 1.0, 10);
    ProbeOptions full;
    full.pairs = 1000;
    full.seed = params.seed;
    const auto check = probe_nonexpansive(OperatorContext(game), full);
    const bool ok = check.pairs == 1000 && check.passed() && game.eta <= probed.eta;
    return Outcome{ok, fmt("probed eta bound %.4f; at eta=%g: %zu/%zu violations (slack 1e-7), "
                           "worst ratio %.6f",
                           probed.eta, game.eta, check.violations, check.pairs,
                           check.worst_ratio)};
  });

  criterion(10, "graph validation", 5.0, [&] {
    std::string detail;
    bool ok = true;
    for (const auto& seq : {GraphSequence::path(L), GraphSequence::complete(L),
                            GraphSequence::ring_rotation(L),
                            GraphSequence::random_undirected(L, 0.3, params.seed)}) {
      const bool pass = validate_sequence(seq, 1000, kDefaultMu, L).ok();
      ok = ok && pass;
      detail += seq.describe() + (pass ? " ok; " : " FAILED; ");
    }
    const GraphSequence broken(L, GraphSequence::Static{{{0, 1}, {1, 2}, {5, 6}, {7, 8}}});
    const bool rejected = !validate_sequence(broken, 1000, kDefaultMu, L).ok();
    detail += rejected ? "disconnected fixture rejected" : "disconnected fixture ACCEPTED";
    return Outcome{ok && rejected, detail};
  });

  std::printf("\n%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
