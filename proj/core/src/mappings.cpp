#include "mpgame/mappings.hpp"

#include <cmath>
#include <random>

#include "mpgame/validation.hpp"

namespace mpgame {
namespace {

double resolvent_coefficient(double eta) { return eta / (1.0 + eta); }

void check_state(const IncentiveState& y, Eigen::Index n) {
  if (y.dim() != n) {
    throw std::invalid_argument("incentive state dimension does not match game");
  }
}

const PopulationSpec& population_at(const OperatorContext& context,
                                    std::size_t population) {
  const auto& pops = context.config().populations;
  if (population >= pops.size()) {
    throw std::out_of_range("population index out of range");
  }
  return pops[population];
}

LocalEvaluation evaluate_with(const IncentiveState& y, const PopulationSpec& pop,
                              std::size_t population,
                              const OperatorContext& context) {
  check_state(y, context.dim());
  LocalEvaluation eval;
  eval.aggregate = aggregate_local(pop, incentive(y, context.config()), population);
  eval.xss = x_star_star(y, context);
  const Vector gamma = gamma_local(eval.aggregate, eval.xss);
  eval.value = IncentiveState::from_stacked(
      context.apply_resolvent(y.stacked() - context.eta() * gamma));
  return eval;
}

}  // namespace

OperatorContext::OperatorContext(GameConfig config)
    : OperatorContext(std::make_shared<const GameConfig>(std::move(config))) {}

OperatorContext::OperatorContext(std::shared_ptr<const GameConfig> config)
    : config_(std::move(config)) {
  if (!config_) throw std::invalid_argument("OperatorContext: null config");
  const Eigen::Index n = config_->dim();
  if (n < 1 || config_->C.cols() != n || config_->K.rows() != n ||
      config_->K.cols() != n) {
    throw std::invalid_argument("OperatorContext: C and K must be n x n");
  }
  if (!(config_->eta > 0.0)) {
    throw std::invalid_argument("OperatorContext: eta must be positive");
  }
  resolvent_ = Matrix::Identity(2 * n, 2 * n) -
               resolvent_coefficient(config_->eta) * monotone_part(n);
  pmatrix_ = make_pmatrix(config_->C, config_->K);
}

Matrix OperatorContext::monotone_part(Eigen::Index n) {
  Matrix M = Matrix::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n).setIdentity();
  M.bottomLeftCorner(n, n).setIdentity();
  return M;
}

Vector OperatorContext::apply_resolvent(const Vector& z) const {
  const Eigen::Index n = dim();
  const double c = resolvent_coefficient(config_->eta);
  Vector out(2 * n);
  out.head(n) = z.head(n) - c * z.head(n);
  out.tail(n) = z.tail(n) - c * z.head(n);
  return out;
}

double OperatorContext::resolvent_column_norm() const {
  return resolvent_.cwiseAbs().colwise().sum().maxCoeff();
}

double OperatorContext::resolvent_row_norm() const {
  return resolvent_.cwiseAbs().rowwise().sum().maxCoeff();
}

Vector incentive(const IncentiveState& y, const GameConfig& config) {
  check_state(y, config.dim());
  return config.C * y.sigma() + config.K * y.lambda();
}

Vector best_response(const AgentProfile& agent, const Vector& v) {
  return solve_box_hyperplane_qp(agent.quad, agent.lin + v,
                                 BoxHyperplaneSet::of(agent));
}

std::vector<Vector> best_responses(const PopulationSpec& pop, const Vector& v,
                                   std::size_t population_index) {
  std::vector<Vector> out;
  out.reserve(pop.agents.size());
  for (std::size_t i = 0; i < pop.agents.size(); ++i) {
    try {
      out.push_back(best_response(pop.agents[i], v));
    } catch (const std::exception& e) {
      throw AgentSolveError(e.what(), population_index, i);
    }
  }
  return out;
}

Vector aggregate_local(const PopulationSpec& pop, const Vector& v,
                       std::size_t population_index) {
  const Eigen::Index n = v.size();
  if (!v.allFinite()) {
    throw std::invalid_argument("aggregate_local: non-finite incentive");
  }
  Vector total = Vector::Zero(n);
  Vector shifted(n);
  Vector x(n);
  for (std::size_t i = 0; i < pop.agents.size(); ++i) {
    const AgentProfile& agent = pop.agents[i];
    try {
      if (agent.lin.size() != n) {
        throw std::invalid_argument("agent dimension does not match incentive");
      }
      shifted = agent.lin + v;
      solve_knapsack_into(agent.quad, shifted, agent.lower, agent.upper,
                          agent.budget, x);
    } catch (const std::exception& e) {
      throw AgentSolveError(e.what(), population_index, i);
    }
    total += pop.delta(static_cast<Eigen::Index>(i)) * x;
  }
  return total;
}

Vector x_star_star(const IncentiveState& y, const OperatorContext& context) {
  const GameConfig& config = context.config();
  check_state(y, config.dim());
  return project_box(-(config.K * (y.sigma() - y.lambda())),
                     config.coupling_lower, config.coupling_upper);
}

Vector gamma_local(const Vector& pop_aggregate, const Vector& xss) {
  if (pop_aggregate.size() != xss.size()) {
    throw std::invalid_argument("gamma_local: dimension mismatch");
  }
  const Eigen::Index n = xss.size();
  Vector gamma(2 * n);
  gamma.head(n) = -pop_aggregate;
  gamma.tail(n) = -(2.0 * pop_aggregate - xss);
  return gamma;
}

LocalEvaluation evaluate_T_local(const IncentiveState& y, std::size_t population,
                                 const OperatorContext& context) {
  return evaluate_with(y, population_at(context, population), population, context);
}

IncentiveState apply_T_local(const IncentiveState& y, std::size_t population,
                             const OperatorContext& context) {
  return evaluate_T_local(y, population, context).value;
}

IncentiveState apply_T_local(const IncentiveState& y, const PopulationSpec& pop,
                             const OperatorContext& context) {
  return evaluate_with(y, pop, 0, context).value;
}

IncentiveState apply_T_global(const IncentiveState& y,
                              const OperatorContext& context) {
  const std::size_t count = context.config().num_populations();
  if (count == 0) throw std::invalid_argument("apply_T_global: no populations");
  Vector sum = Vector::Zero(2 * context.dim());
  for (std::size_t l = 0; l < count; ++l) {
    sum += apply_T_local(y, l, context).stacked();
  }
  return IncentiveState::from_stacked(sum / static_cast<double>(count));
}

Vector aggregate_global(const IncentiveState& y, const OperatorContext& context) {
  const auto& pops = context.config().populations;
  const Vector v = incentive(y, context.config());
  Vector sum = Vector::Zero(context.dim());
  for (std::size_t l = 0; l < pops.size(); ++l) sum += aggregate_local(pops[l], v, l);
  return sum / static_cast<double>(pops.size());
}

double p_norm(const Vector& w, const OperatorContext& context) {
  const Eigen::Index n = context.dim();
  if (w.size() != 2 * n) throw std::invalid_argument("p_norm: expected 2n vector");
  const GameConfig& config = context.config();
  const auto s = w.head(n);
  const auto l = w.tail(n);
  // w'Pw = s'(C+2K)s - 2 s'K l + l'K l
  const Vector ks = config.K * s;
  const double quad = s.dot(config.C * s) + 2.0 * s.dot(ks) -
                      2.0 * l.dot(ks) + l.dot(config.K * l);
  return std::sqrt(std::max(quad, 0.0));
}

NonexpansivenessProbe probe_nonexpansive(const OperatorContext& context,
                                         const ProbeOptions& options) {
  const GameConfig& config = context.config();
  const Eigen::Index n = config.dim();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_state = [&] {
    Vector sigma(n);
    Vector lambda(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      sigma(t) = config.coupling_lower(t) +
                 unit(rng) * (config.coupling_upper(t) - config.coupling_lower(t));
      lambda(t) = options.lambda_range * (2.0 * unit(rng) - 1.0);
    }
    return IncentiveState(std::move(sigma), std::move(lambda));
  };

  NonexpansivenessProbe probe;
  for (std::size_t j = 0; j < options.pairs; ++j) {
    const IncentiveState y = draw_state();
    IncentiveState y2;
    if (j % 2 == 0) {
      y2 = draw_state();
    } else {
      Vector noise(2 * n);
      for (Eigen::Index t = 0; t < 2 * n; ++t) noise(t) = 2.0 * unit(rng) - 1.0;
      y2 = IncentiveState::from_stacked(y.stacked() + options.local_scale * noise);
    }
    const double before = p_norm(y.stacked() - y2.stacked(), context);
    const double after = p_norm(apply_T_global(y, context).stacked() -
                                    apply_T_global(y2, context).stacked(),
                                context);
    ++probe.pairs;
    const double excess = after - before;
    probe.worst_excess = j == 0 ? excess : std::max(probe.worst_excess, excess);
    if (before > 0.0) probe.worst_ratio = std::max(probe.worst_ratio, after / before);
    if (excess > options.slack) ++probe.violations;
  }
  return probe;
}

EtaProbeResult probe_eta(const GameConfig& config, const ProbeOptions& options,
                         double eta_min, double eta_max, std::size_t bisections) {
  if (!(eta_min > 0.0) || !(eta_max > eta_min)) {
    throw std::invalid_argument("probe_eta: need 0 < eta_min < eta_max");
  }
  auto run = [&](double eta) {
    GameConfig trial = config;
    trial.eta = eta;
    return probe_nonexpansive(OperatorContext(std::move(trial)), options);
  };

  EtaProbeResult result;
  NonexpansivenessProbe top = run(eta_max);
  if (top.passed()) {
    result.eta = eta_max;
    result.at_eta = top;
    return result;
  }
  NonexpansivenessProbe bottom = run(eta_min);
  if (!bottom.passed()) {
    result.eta = 0.0;
    result.at_eta = bottom;
    return result;
  }
  // Geometric bisection: the admissible range spans orders of magnitude.
  double good = eta_min;
  double bad = eta_max;
  NonexpansivenessProbe good_probe = bottom;
  for (std::size_t j = 0; j < bisections; ++j) {
    const double mid = std::sqrt(good * bad);
    NonexpansivenessProbe probe = run(mid);
    if (probe.passed()) {
      good = mid;
      good_probe = probe;
    } else {
      bad = mid;
    }
    ++result.bisections;
  }
  result.eta = good;
  result.at_eta = good_probe;
  return result;
}

double xss_average_residual(std::span<const IncentiveState> states,
                            const OperatorContext& context) {
  if (states.empty()) return 0.0;
  const Eigen::Index n = context.dim();
  Vector mean_xss = Vector::Zero(n);
  Vector mean_state = Vector::Zero(2 * n);
  for (const auto& y : states) {
    mean_xss += x_star_star(y, context);
    mean_state += y.stacked();
  }
  const double inv = 1.0 / static_cast<double>(states.size());
  mean_xss *= inv;
  mean_state *= inv;
  return max_abs(mean_xss -
                 x_star_star(IncentiveState::from_stacked(mean_state), context));
}

}  // namespace mpgame
