#include "mpgame/validation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace mpgame {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr std::size_t kMaxListed = 5;

bool is_symmetric(const Matrix& m) {
  return m.rows() == m.cols() &&
         (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol;
}

std::string format_eig(double value) {
  std::ostringstream out;
  out << "min eig " << value;
  return out.str();
}

}  // namespace

double smallest_eigenvalue(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_positive_definite(const Matrix& m, double tol) {
  return m.rows() > 0 && is_symmetric(m) && smallest_eigenvalue(m) > tol;
}

Matrix make_pmatrix(const Matrix& C, const Matrix& K) {
  const Eigen::Index n = C.rows();
  Matrix P(2 * n, 2 * n);
  P.topLeftCorner(n, n) = C + 2.0 * K;
  P.topRightCorner(n, n) = -K;
  P.bottomLeftCorner(n, n) = -K;
  P.bottomRightCorner(n, n) = K;
  return P;
}

ValidationReport validate_game(const GameConfig& config) {
  using Severity = ValidationReport::Severity;
  ValidationReport report;
  const Eigen::Index n = config.dim();

  bool dims_ok = n >= 1 && config.C.cols() == n && config.K.rows() == n &&
                 config.K.cols() == n && config.coupling_lower.size() == n &&
                 config.coupling_upper.size() == n &&
                 !config.populations.empty();
  std::string dims_detail;
  for (std::size_t l = 0; dims_ok && l < config.populations.size(); ++l) {
    const auto& pop = config.populations[l];
    if (pop.agents.empty() ||
        pop.delta.size() != static_cast<Eigen::Index>(pop.agents.size())) {
      dims_ok = false;
      dims_detail = "population " + std::to_string(l) + " delta/agent count";
    }
    for (const auto& agent : pop.agents) {
      if (agent.lin.size() != n || agent.lower.size() != n ||
          agent.upper.size() != n) {
        dims_ok = false;
        dims_detail = "population " + std::to_string(l) + " agent dimension";
        break;
      }
    }
  }
  report.add("dimensions", dims_ok, dims_detail);
  report.add("eta > 0", config.eta > 0.0);
  if (!dims_ok) return report;

  report.add("K symmetric", is_symmetric(config.K));
  report.add("C symmetric", is_symmetric(config.C));
  const double eig_k = smallest_eigenvalue(config.K);
  const double eig_ck = smallest_eigenvalue(config.C + config.K);
  report.add("K>0", is_symmetric(config.K) && eig_k > kPositiveDefiniteTol,
             format_eig(eig_k));
  report.add("C+K>0",
             is_symmetric(config.C + config.K) && eig_ck > kPositiveDefiniteTol,
             format_eig(eig_ck));
  const Matrix P = make_pmatrix(config.C, config.K);
  report.add("P>0", Eigen::LLT<Matrix>(P).info() == Eigen::Success &&
                        is_positive_definite(P));

  const bool ordered =
      (config.coupling_lower.array() <= config.coupling_upper.array()).all();
  report.add("coupling bounds ordered", ordered);

  std::ostringstream infeasible;
  std::size_t infeasible_count = 0;
  bool quad_positive = true;
  double min_quad = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < config.populations.size(); ++l) {
    const auto& agents = config.populations[l].agents;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& agent = agents[i];
      min_quad = std::min(min_quad, agent.quad);
      if (agent.quad <= 0.0) quad_positive = false;
      if (!agent.budget_feasible() || agent.quad <= 0.0) {
        if (infeasible_count < kMaxListed) {
          infeasible << (infeasible_count ? ", " : "") << "(" << l << "," << i
                     << ")";
        }
        ++infeasible_count;
      }
    }
  }
  std::string feas_detail;
  if (infeasible_count > 0) {
    feas_detail = std::to_string(infeasible_count) +
                  " agent(s) with empty feasible set or quad <= 0: " +
                  infeasible.str();
  }
  report.add("agent feasibility", infeasible_count == 0, feas_detail);

  bool delta_ok = true;
  std::string delta_detail;
  for (std::size_t l = 0; l < config.populations.size(); ++l) {
    const Vector& delta = config.populations[l].delta;
    const double sum = delta.sum();
    if ((delta.array() < 0.0).any() || std::abs(sum - 1.0) > kDeltaSumTol) {
      delta_ok = false;
      delta_detail = "population " + std::to_string(l) + " sums to " +
                     std::to_string(sum);
      break;
    }
  }
  report.add("delta normalization", delta_ok, delta_detail);

  // Midpoint of a box is strictly interior iff every side has positive width.
  const bool slater =
      (config.coupling_lower.array() < config.coupling_upper.array()).all();
  report.add("Slater", slater,
             slater ? "box midpoint strictly feasible" : "degenerate coupling box");

  // Non-expansive quadratic best responses need q - 1/(4q) >= 0.
  report.add("best-response non-expansive (q >= 0.5)",
             quad_positive && min_quad >= 0.5,
             "min quad " + std::to_string(min_quad), Severity::kWarning);

  // Necessary condition for C inside the Minkowski average of agent sets:
  // the coupling box must sit inside the averaged box hull.
  Vector hull_lo = Vector::Zero(n);
  Vector hull_hi = Vector::Zero(n);
  const double inv_l = 1.0 / static_cast<double>(config.populations.size());
  for (const auto& pop : config.populations) {
    for (std::size_t i = 0; i < pop.agents.size(); ++i) {
      const double w = inv_l * pop.delta(static_cast<Eigen::Index>(i));
      hull_lo += w * pop.agents[i].lower;
      hull_hi += w * pop.agents[i].upper;
    }
  }
  const bool inside = (hull_lo.array() <= config.coupling_lower.array() + 1e-12).all() &&
                      (config.coupling_upper.array() <= hull_hi.array() + 1e-12).all();
  report.add("coupling box within agent hull", inside, {}, Severity::kWarning);
  return report;
}

}  // namespace mpgame
