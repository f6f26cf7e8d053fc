#include "mpgame/schedule.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpgame {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

StepSchedule::StepSchedule(Kind kind) : kind_(std::move(kind)) {
  std::visit(
      Overloaded{
          [](const Harmonic& h) {
            require(h.offset > 0.0 && h.scale > 0.0,
                    "StepSchedule::Harmonic: offset and scale must be > 0");
            require(h.scale / h.offset <= 1.0,
                    "StepSchedule::Harmonic: alpha_0 = scale/offset must be <= 1");
          },
          [](const Power& p) {
            require(p.exponent > 0.5 && p.exponent <= 1.0,
                    "StepSchedule::Power: exponent must lie in (0.5, 1]");
            require(p.offset > 0.0 && p.scale > 0.0,
                    "StepSchedule::Power: offset and scale must be > 0");
            require(p.scale / std::pow(p.offset, p.exponent) <= 1.0,
                    "StepSchedule::Power: alpha_0 must be <= 1");
          },
          [](const Custom& c) {
            require(!c.values.empty(), "StepSchedule::Custom: empty list");
            for (std::size_t k = 0; k < c.values.size(); ++k) {
              require(c.values[k] > 0.0 && c.values[k] < 1.0,
                      "StepSchedule::Custom: values must lie in (0, 1)");
              require(k == 0 || c.values[k] <= c.values[k - 1],
                      "StepSchedule::Custom: values must be non-increasing");
            }
          },
      },
      kind_);
}

double StepSchedule::at(std::size_t k) const {
  const auto kd = static_cast<double>(k);
  return std::visit(
      Overloaded{
          [kd](const Harmonic& h) { return h.scale / (kd + h.offset); },
          [kd](const Power& p) {
            return p.scale / std::pow(kd + p.offset, p.exponent);
          },
          [k](const Custom& c) {
            if (k >= c.values.size()) {
              throw std::out_of_range("StepSchedule::Custom: no value for k=" +
                                      std::to_string(k));
            }
            return c.values[k];
          },
      },
      kind_);
}

std::size_t StepSchedule::length() const {
  if (const auto* c = std::get_if<Custom>(&kind_)) return c->values.size();
  return std::numeric_limits<std::size_t>::max();
}

}  // namespace mpgame
