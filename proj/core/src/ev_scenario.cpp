#include "mpgame/ev_scenario.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace mpgame {

Vector default_demand_profile() {
  Vector d(14);
  d << 0.500, 0.505, 0.530, 0.490, 0.480, 0.475, 0.470, 0.470, 0.475, 0.485, 0.530, 0.525,
      0.505, 0.500;
  return d;
}

Vector default_caps() {
  Vector caps = Vector::Constant(14, 0.1);
  for (int t : {0, 1, 2, 10, 11, 12, 13}) caps(t) = 0.04;
  return caps;
}

EvScenarioParams build_default(bool paper_scale) {
  EvScenarioParams params;
  params.agents_per_population = paper_scale ? kPaperAgentsPerPopulation : 50;
  params.p = Vector::Constant(14, 0.075);
  params.d = default_demand_profile();
  params.x_lower = Vector::Zero(14);
  params.x_upper = Vector::Constant(14, 0.25);
  params.caps = default_caps();
  return params;
}

void EvScenarioParams::validate() const {
  const auto len = static_cast<Eigen::Index>(n);
  auto require = [&](const Vector& v, const char* name) {
    if (v.size() != len) {
      throw std::invalid_argument(std::string("EvScenarioParams: ") + name +
                                  " must have length n = " + std::to_string(n));
    }
  };
  if (n == 0 || L == 0 || agents_per_population == 0) {
    throw std::invalid_argument("EvScenarioParams: n, L and agents_per_population must be >= 1");
  }
  require(p, "p");
  require(d, "d");
  require(x_lower, "x_lower");
  require(x_upper, "x_upper");
  require(caps, "caps");
  if (!(q > 0.0)) throw std::invalid_argument("EvScenarioParams: q must be positive");
  if ((x_lower.array() > x_upper.array()).any()) {
    throw std::invalid_argument("EvScenarioParams: x_lower > x_upper");
  }
  if (!(beta_min <= beta_max)) {
    throw std::invalid_argument("EvScenarioParams: beta_min > beta_max");
  }
  if (beta_max < x_lower.sum() || beta_min > x_upper.sum()) {
    throw std::invalid_argument("EvScenarioParams: budget range misses [sum lower, sum upper]");
  }
}

GameConfig to_canonical(const EvScenarioParams& params, const Matrix& K) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(params.n);
  GameConfig config;
  config.C = params.a * Matrix::Identity(n, n);
  if (K.size() == 0) {
    config.K = params.k_scale * Matrix::Identity(n, n);
  } else {
    if (K.rows() != n || K.cols() != n) {
      throw std::invalid_argument("to_canonical: K must be n x n");
    }
    config.K = K;
  }
  config.eta = params.eta;
  config.schedule = params.schedule;
  config.coupling_lower = Vector::Zero(n);
  config.coupling_upper = params.caps;

  const Vector lin = params.p + params.a * params.d + Vector::Constant(n, params.b);
  const double lo = params.x_lower.sum();
  const double hi = params.x_upper.sum();
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> draw(params.beta_min, params.beta_max);

  config.populations.reserve(params.L);
  for (std::size_t l = 0; l < params.L; ++l) {
    std::vector<AgentProfile> agents;
    agents.reserve(params.agents_per_population);
    for (std::size_t i = 0; i < params.agents_per_population; ++i) {
      double beta = draw(rng);
      std::size_t failures = 0;
      while (beta < lo || beta > hi) {
        if (++failures >= kBetaRetries) {
          throw std::runtime_error("to_canonical: no feasible budget after " +
                                   std::to_string(kBetaRetries) + " draws");
        }
        beta = draw(rng);
      }
      agents.push_back({params.q, lin, params.x_lower, params.x_upper, beta});
    }
    config.populations.push_back(PopulationSpec::uniform(std::move(agents)));
  }
  return config;
}

double ev_cost(const EvScenarioParams& params, double quad, const Vector& x,
               const Vector& sigma) {
  const Vector price =
      params.a * (sigma + params.d) + Vector::Constant(x.size(), params.b);
  return quad * x.squaredNorm() + params.p.dot(x) + price.dot(x);
}

}  // namespace mpgame
