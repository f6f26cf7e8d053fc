#include "mpgame/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <iomanip>
#include <ostream>
#include <random>
#include <thread>

namespace mpgame {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::size_t worker_count(const RunSettings& settings, std::size_t tasks) {
  if (!settings.parallel || tasks < 2) return 1;
  std::size_t threads = settings.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::min(threads, tasks);
}

// Runs fn(i) for i < count on `workers` threads, contiguous chunks. The first
// failing index (lowest i) is rethrown so errors are deterministic too.
template <class Fn>
void for_each_index(std::size_t count, std::size_t workers, Fn&& fn) {
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        for (std::size_t i = begin; i < end; ++i) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

IncentiveState zero_lambda(const IncentiveState& y) {
  return IncentiveState(y.sigma(), Vector::Zero(y.dim()));
}

std::vector<std::vector<Vector>> strategies_for(const OperatorContext& context,
                                                std::span<const IncentiveState> states,
                                                std::size_t workers) {
  const auto& pops = context.config().populations;
  std::vector<std::vector<Vector>> out(pops.size());
  for_each_index(pops.size(), workers, [&](std::size_t l) {
    const IncentiveState& y = states.size() == 1 ? states[0] : states[l];
    out[l] = best_responses(pops[l], incentive(y, context.config()), l);
  });
  return out;
}

struct Diagnostics {
  IterationRecord record;
  bool converged = false;
};

// Shared loop for Algorithm 1, its lambda-frozen variant and (with a single
// state and an identity mixing step) the centralized oracle.
class Runner {
 public:
  Runner(const OperatorContext& context, const RunSettings& settings,
         const IterateObserver& observer, bool freeze_lambda)
      : context_(context),
        settings_(settings),
        observer_(observer),
        freeze_lambda_(freeze_lambda) {
    settings_.validate();
  }

  RunResult run_network(const GraphSequence& seq, std::vector<IncentiveState> states) {
    const std::size_t L = context_.config().num_populations();
    if (L == 0) throw std::invalid_argument("run: game has no populations");
    if (seq.num_nodes() != L) {
      throw std::invalid_argument("run: graph has " + std::to_string(seq.num_nodes()) +
                                  " nodes but the game has " + std::to_string(L) +
                                  " populations");
    }
    if (states.size() != L) {
      throw std::invalid_argument("run: need one initial state per population");
    }
    check_init(states);
    const std::size_t workers = worker_count(settings_, L);
    std::vector<IncentiveState> local(L);
    std::vector<IncentiveState> next(L);

    RunResult result;
    result.trace = IterationTrace(settings_.record_every);
    const auto start = Clock::now();
    std::size_t k = 0;
    for (;; ++k) {
      if (observer_) observer_(k, states);
      for_each_index(L, workers, [&](std::size_t l) {
        local[l] = guarded(k, [&] { return apply_T_local(states[l], l, context_); });
        if (freeze_lambda_) local[l] = zero_lambda(local[l]);
      });
      if (k % settings_.record_every == 0) {
        const Diagnostics diag = diagnose(k, states, local, start);
        result.trace.push(diag.record);
        if (diag.converged) {
          result.termination = Termination::kConverged;
          break;
        }
      }
      if (k == settings_.max_iterations) break;

      const double alpha = settings_alpha(k);
      const Matrix W = seq.weights(k);
      for_each_index(L, workers, [&](std::size_t l) {
        Vector mixed = Vector::Zero(2 * context_.dim());
        for (std::size_t m = 0; m < L; ++m) {
          const double w = W(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m));
          if (w != 0.0) mixed += w * states[m].stacked();
        }
        next[l] = IncentiveState::from_stacked((1.0 - alpha) * mixed +
                                               alpha * local[l].stacked());
      });
      std::swap(states, next);
    }
    return finish(std::move(states), std::move(result), k, workers);
  }

  RunResult run_central(IncentiveState state) {
    std::vector<IncentiveState> states{std::move(state)};
    check_init(states);
    const std::size_t workers = worker_count(settings_, context_.config().num_populations());
    RunResult result;
    result.trace = IterationTrace(settings_.record_every);
    const auto start = Clock::now();
    std::size_t k = 0;
    for (;; ++k) {
      if (observer_) observer_(k, states);
      const IncentiveState t = guarded(k, [&] { return global_T(states[0], workers); });
      if (k % settings_.record_every == 0) {
        IterationRecord rec;
        rec.k = k;
        rec.alpha = settings_alpha(k);
        rec.fixed_point_residual = max_abs(states[0].stacked() - t.stacked());
        rec.constraint_violation =
            constraint_violation(states[0].sigma(), context_.config().coupling_upper);
        rec.elapsed_ms = elapsed_ms(start);
        result.trace.push(rec);
        if (rec.fixed_point_residual <= settings_.stop_fixed_point_tol) {
          result.termination = Termination::kConverged;
          break;
        }
      }
      if (k == settings_.max_iterations) break;
      const double alpha = settings_alpha(k);
      // Same arithmetic as the network update with W = [1].
      Vector mixed = Vector::Zero(2 * context_.dim());
      mixed += 1.0 * states[0].stacked();
      states[0] = IncentiveState::from_stacked((1.0 - alpha) * mixed + alpha * t.stacked());
    }
    return finish(std::move(states), std::move(result), k, workers);
  }

 private:
  double settings_alpha(std::size_t k) const { return context_.config().schedule.at(k); }

  void check_init(const std::vector<IncentiveState>& states) const {
    const GameConfig& config = context_.config();
    for (const auto& y : states) {
      if (y.dim() != config.dim()) {
        throw std::invalid_argument("run: initial state dimension does not match game");
      }
      const double slack = 1e-12;
      if (((y.sigma() - config.coupling_lower).array() < -slack).any() ||
          ((y.sigma() - config.coupling_upper).array() > slack).any()) {
        throw std::invalid_argument("run: initial sigma must lie in the coupling box");
      }
    }
  }

  template <class Fn>
  auto guarded(std::size_t k, Fn&& fn) const -> decltype(fn()) {
    try {
      return fn();
    } catch (const AgentSolveError& e) {
      throw RunError("iteration " + std::to_string(k) + ", population " +
                         std::to_string(e.population()) + ", agent " +
                         std::to_string(e.agent()) + ": " + e.what(),
                     k, e.population(), e.agent());
    }
  }

  IncentiveState global_T(const IncentiveState& y, std::size_t workers) const {
    const std::size_t L = context_.config().num_populations();
    IncentiveState t;
    if (workers <= 1) {
      t = apply_T_global(y, context_);
    } else {
      std::vector<IncentiveState> parts(L);
      for_each_index(L, workers,
                     [&](std::size_t l) { parts[l] = apply_T_local(y, l, context_); });
      Vector sum = Vector::Zero(2 * context_.dim());
      for (const auto& p : parts) sum += p.stacked();
      t = IncentiveState::from_stacked(sum / static_cast<double>(L));
    }
    return freeze_lambda_ ? zero_lambda(t) : t;
  }

  Diagnostics diagnose(std::size_t k, const std::vector<IncentiveState>& states,
                       const std::vector<IncentiveState>& local,
                       Clock::time_point start) const {
    const std::size_t L = states.size();
    const IncentiveState ybar = average_state(states);
    const IncentiveState tbar =
        guarded(k, [&] { return global_T(ybar, worker_count(settings_, L)); });
    Vector mean_local = Vector::Zero(2 * context_.dim());
    for (const auto& t : local) mean_local += t.stacked();
    mean_local /= static_cast<double>(L);

    Diagnostics d;
    IterationRecord& rec = d.record;
    rec.k = k;
    rec.alpha = settings_alpha(k);
    rec.consensus_residual = consensus_residual(states);
    rec.fixed_point_residual = max_abs(ybar.stacked() - tbar.stacked());
    rec.perturbation_pnorm = p_norm(mean_local - tbar.stacked(), context_);
    rec.constraint_violation =
        constraint_violation(ybar.sigma(), context_.config().coupling_upper);
    rec.elapsed_ms = elapsed_ms(start);
    d.converged = rec.consensus_residual <= settings_.stop_consensus_tol &&
                  rec.fixed_point_residual <= settings_.stop_fixed_point_tol;
    return d;
  }

  RunResult finish(std::vector<IncentiveState> states, RunResult result, std::size_t k,
                   std::size_t workers) const {
    result.iterations = k;
    result.average_state = average_state(states);
    result.final_strategies = guarded(k, [&] { return strategies_for(context_, states, workers); });
    result.final_states = std::move(states);
    return result;
  }

  const OperatorContext& context_;
  RunSettings settings_;
  const IterateObserver& observer_;
  bool freeze_lambda_;
};

}  // namespace

void RunSettings::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("RunSettings: max_iterations < 1");
  if (!(stop_consensus_tol > 0.0) || !(stop_fixed_point_tol > 0.0)) {
    throw std::invalid_argument("RunSettings: tolerances must be positive");
  }
  if (record_every < 1) throw std::invalid_argument("RunSettings: record_every < 1");
  if (!(init_perturbation >= 0.0)) {
    throw std::invalid_argument("RunSettings: init_perturbation must be >= 0");
  }
}

const char* to_string(Termination termination) {
  return termination == Termination::kConverged ? "Converged" : "MaxIterations";
}

std::vector<IncentiveState> default_initial_states(const GameConfig& config,
                                                   std::size_t count,
                                                   const RunSettings& settings) {
  const Eigen::Index n = config.dim();
  const Vector mid = 0.5 * (config.coupling_lower + config.coupling_upper);
  const Vector half = 0.5 * (config.coupling_upper - config.coupling_lower);
  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<IncentiveState> out;
  out.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    Vector sigma = mid;
    Vector lambda = Vector::Zero(n);
    if (settings.init_perturbation > 0.0) {
      const double r = std::min(settings.init_perturbation, 1.0);
      for (Eigen::Index t = 0; t < n; ++t) {
        sigma(t) += r * half(t) * unit(rng);
        lambda(t) += settings.init_perturbation * unit(rng);
      }
    }
    out.emplace_back(std::move(sigma), std::move(lambda));
  }
  return out;
}

RunResult run_algorithm1(const OperatorContext& context, const GraphSequence& seq,
                         std::vector<IncentiveState> init, const RunSettings& settings,
                         const IterateObserver& observer) {
  return Runner(context, settings, observer, false).run_network(seq, std::move(init));
}

RunResult run_oracle(const OperatorContext& context, IncentiveState init,
                     const RunSettings& settings, const IterateObserver& observer) {
  if (context.config().num_populations() == 0) {
    throw std::invalid_argument("run_oracle: game has no populations");
  }
  return Runner(context, settings, observer, false).run_central(std::move(init));
}

RunResult run_no_coupling(const OperatorContext& context, const GraphSequence& seq,
                          std::vector<IncentiveState> init, const RunSettings& settings,
                          const IterateObserver& observer) {
  for (auto& y : init) y = zero_lambda(y);
  return Runner(context, settings, observer, true).run_network(seq, std::move(init));
}

IncentiveState average_state(std::span<const IncentiveState> states) {
  if (states.empty()) throw std::invalid_argument("average_state: no states");
  Vector sum = Vector::Zero(2 * states.front().dim());
  for (const auto& y : states) {
    if (y.dim() != states.front().dim()) {
      throw std::invalid_argument("average_state: dimension mismatch");
    }
    sum += y.stacked();
  }
  return IncentiveState::from_stacked(sum / static_cast<double>(states.size()));
}

double consensus_residual(std::span<const IncentiveState> states) {
  if (states.empty()) throw std::invalid_argument("consensus_residual: no states");
  const Vector mean = average_state(states).stacked();
  double worst = 0.0;
  for (const auto& y : states) worst = std::max(worst, max_abs(y.stacked() - mean));
  return worst;
}

double perturbation_pnorm(std::span<const IncentiveState> states,
                          const OperatorContext& context) {
  if (states.empty()) throw std::invalid_argument("perturbation_pnorm: no states");
  const std::size_t L = context.config().num_populations();
  if (states.size() != L) {
    throw std::invalid_argument("perturbation_pnorm: need one state per population");
  }
  Vector mean_local = Vector::Zero(2 * context.dim());
  for (std::size_t l = 0; l < L; ++l) {
    mean_local += apply_T_local(states[l], l, context).stacked();
  }
  mean_local /= static_cast<double>(L);
  return p_norm(mean_local - apply_T_global(average_state(states), context).stacked(),
                context);
}

Vector slot_violations(const Vector& sigma, const Vector& upper) {
  if (sigma.size() != upper.size()) {
    throw std::invalid_argument("slot_violations: dimension mismatch");
  }
  return (sigma - upper).cwiseMax(0.0);
}

double constraint_violation(const Vector& sigma, const Vector& upper) {
  return max_abs(slot_violations(sigma, upper));
}

PerturbationSums perturbation_sums(const IterationTrace& trace) {
  PerturbationSums sums;
  const auto& records = trace.records();
  const std::size_t half = records.size() / 2;
  for (std::size_t j = 0; j < records.size(); ++j) {
    const double term = records[j].alpha * records[j].perturbation_pnorm;
    sums.total += term;
    if (j >= half) sums.tail += term;
  }
  return sums;
}

void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
  out << "k,alpha,consensus_residual,fixed_point_residual,perturbation_pnorm,"
         "constraint_violation,elapsed_ms\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& r : trace.records()) {
    out << r.k << ',' << r.alpha << ',' << r.consensus_residual << ','
        << r.fixed_point_residual << ',' << r.perturbation_pnorm << ','
        << r.constraint_violation << ',' << r.elapsed_ms << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace mpgame
