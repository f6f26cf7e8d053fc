#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace mpgame {

/// Step sizes alpha_k for the Krasnoselskii-Mann averaging.
///
/// Harmonic: alpha_k = scale / (k + offset).
/// Power:    alpha_k = scale / (k + offset)^exponent, exponent in (0.5, 1].
/// Custom:   explicit list, must be non-increasing and inside (0, 1).
///
/// The parametric forms are non-summable and square-summable; construction
/// rejects parameters that would emit alpha_0 > 1. alpha_0 = 1 is allowed so
/// that Harmonic(1) is exactly 1/(k+1); every later step is inside (0, 1).
class StepSchedule {
 public:
  struct Harmonic {
    double offset = 1.0;
    double scale = 1.0;
  };
  struct Power {
    double exponent = 1.0;
    double scale = 1.0;
    double offset = 1.0;
  };
  struct Custom {
    std::vector<double> values;
  };
  using Kind = std::variant<Harmonic, Power, Custom>;

  StepSchedule() : StepSchedule(Harmonic{}) {}
  StepSchedule(Kind kind);  // NOLINT(google-explicit-constructor)

  static StepSchedule harmonic(double offset = 1.0, double scale = 1.0) {
    return StepSchedule(Harmonic{offset, scale});
  }
  static StepSchedule power(double exponent, double scale,
                            double offset = 1.0) {
    return StepSchedule(Power{exponent, scale, offset});
  }
  static StepSchedule custom(std::vector<double> values) {
    return StepSchedule(Custom{std::move(values)});
  }

  /// Throws std::out_of_range past the end of a Custom list.
  double at(std::size_t k) const;
  double operator()(std::size_t k) const { return at(k); }

  /// Number of steps available; SIZE_MAX for the parametric kinds.
  std::size_t length() const;

  const Kind& kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mpgame
