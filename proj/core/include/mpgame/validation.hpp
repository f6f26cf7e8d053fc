#pragma once

#include "mpgame/types.hpp"

namespace mpgame {

inline constexpr double kPositiveDefiniteTol = 1e-10;
inline constexpr double kDeltaSumTol = 1e-12;

/// Smallest eigenvalue of the symmetric part of m.
double smallest_eigenvalue(const Matrix& m);

/// Symmetric within 1e-12 and smallest eigenvalue > tol.
bool is_positive_definite(const Matrix& m, double tol = kPositiveDefiniteTol);

/// Metric of the operator-splitting space, [[C+2K, -K], [-K, K]].
Matrix make_pmatrix(const Matrix& C, const Matrix& K);

/// Game-level assumption checks. Check names:
///   "dimensions", "eta > 0", "K symmetric", "C symmetric", "K>0", "C+K>0",
///   "P>0", "coupling bounds ordered", "agent feasibility",
///   "delta normalization", "Slater", and the warnings
///   "best-response non-expansive (q >= 0.5)" and "coupling box within agent hull".
ValidationReport validate_game(const GameConfig& config);

}  // namespace mpgame
