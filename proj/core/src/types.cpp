#include "mpgame/types.hpp"

#include <sstream>
#include <stdexcept>

namespace mpgame {

IncentiveState::IncentiveState(Vector sigma, Vector lambda)
    : sigma_(std::move(sigma)), lambda_(std::move(lambda)) {
  if (sigma_.size() < 1 || sigma_.size() != lambda_.size()) {
    throw std::invalid_argument(
        "IncentiveState: sigma and lambda must share a dimension >= 1");
  }
  if (!sigma_.allFinite() || !lambda_.allFinite()) {
    throw std::invalid_argument("IncentiveState: non-finite entry");
  }
}

IncentiveState IncentiveState::from_stacked(const Vector& stacked) {
  if (stacked.size() < 2 || stacked.size() % 2 != 0) {
    throw std::invalid_argument(
        "IncentiveState::from_stacked: length must be even and >= 2");
  }
  const Eigen::Index n = stacked.size() / 2;
  return IncentiveState(stacked.head(n), stacked.tail(n));
}

IncentiveState IncentiveState::zeros(Eigen::Index n) {
  return IncentiveState(Vector::Zero(n), Vector::Zero(n));
}

Vector IncentiveState::stacked() const {
  Vector y(2 * dim());
  y << sigma_, lambda_;
  return y;
}

bool AgentProfile::bounds_ordered() const {
  return lower.size() == upper.size() && (lower.array() <= upper.array()).all();
}

bool AgentProfile::budget_feasible() const {
  return bounds_ordered() && lower.sum() <= budget && budget <= upper.sum();
}

double AgentProfile::cost(const Vector& x) const {
  return quad * x.squaredNorm() + lin.dot(x);
}

PopulationSpec PopulationSpec::uniform(std::vector<AgentProfile> agents) {
  PopulationSpec pop;
  const auto count = static_cast<Eigen::Index>(agents.size());
  pop.delta = Vector::Constant(count, count > 0 ? 1.0 / static_cast<double>(count) : 0.0);
  pop.agents = std::move(agents);
  return pop;
}

std::size_t GameConfig::num_agents() const {
  std::size_t total = 0;
  for (const auto& pop : populations) total += pop.size();
  return total;
}

void ValidationReport::add(std::string name, bool passed, std::string detail,
                           Severity severity) {
  checks.push_back({std::move(name), passed, severity, std::move(detail)});
}

bool ValidationReport::ok() const {
  for (const auto& check : checks) {
    if (!check.passed && check.severity == Severity::kError) return false;
  }
  return true;
}

const ValidationReport::Check* ValidationReport::find(
    const std::string& name) const {
  for (const auto& check : checks) {
    if (check.name == name) return &check;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (const auto& check : checks) {
    const char* tag = check.passed ? "PASS"
                      : check.severity == Severity::kWarning ? "WARN"
                                                              : "FAIL";
    out << tag << "  " << check.name;
    if (!check.detail.empty()) out << "  (" << check.detail << ")";
    out << '\n';
  }
  return out.str();
}

void IterationTrace::push(const IterationRecord& record) {
  if (!records_.empty()) {
    const std::size_t prev = records_.back().k;
    if (record.k != prev + stride_) {
      std::ostringstream msg;
      msg << "IterationTrace: expected k=" << prev + stride_ << ", got "
          << record.k;
      throw std::logic_error(msg.str());
    }
  }
  records_.push_back(record);
}

double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace mpgame
