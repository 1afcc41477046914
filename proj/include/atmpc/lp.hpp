#pragma once

#include "atmpc/linalg.hpp"

namespace atmpc::lp {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double value = 0.0;  // cᵀx at the optimum
  Vector x;
  int pivots = 0;
};

// maximize cᵀx subject to A x ≤ b, x free.
//
// Solved through its dual (min bᵀy, Aᵀy = c, y ≥ 0) with a dense two-phase
// tableau simplex under Bland's rule. The tableau has only dim(x) rows, which
// is what makes one-LP-per-row redundancy pruning cheap at small dimension.
LpResult maximize(const Vector& c, const Matrix& A, const Vector& b);

// Largest r ≤ r_cap with a ball of radius r (rows assumed normalized) inside
// {A x ≤ b}. r < 0 means the set is empty; r ≈ 0 means no interior.
struct Chebyshev {
  bool feasible = false;
  double radius = 0.0;
  Vector center;
};
Chebyshev chebyshev_center(const Matrix& A, const Vector& b, double r_cap = 1.0);

}  // namespace atmpc::lp
