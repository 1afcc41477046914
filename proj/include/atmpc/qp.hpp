#pragma once

#include <Eigen/Sparse>

#include "atmpc/linalg.hpp"

namespace atmpc::qp {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// minimize ½ xᵀ H x + gᵀ x  subject to  A_ineq x ≤ b_ineq,  A_eq x = b_eq.
struct QpProblem {
  Matrix H;
  Vector g;
  SparseRows A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;

  int num_vars() const { return static_cast<int>(g.size()); }
};

enum class QpStatus { kOptimal, kInfeasible, kNumericalFailure };

const char* to_string(QpStatus s);

struct QpResult {
  QpStatus status = QpStatus::kNumericalFailure;
  Vector x;
  Vector lambda_ineq;  // ≥ 0, for rows of A_ineq
  Vector lambda_eq;
  double objective = 0.0;
  double primal_residual = 0.0;        // max violation over all rows
  double stationarity_residual = 0.0;  // ‖Hx + g + A_ineqᵀλ + A_eqᵀν‖∞
  int iterations = 0;
};

// Goldfarb–Idnani dual active-set method. H must be positive definite.
// The result is KKT-checked: primal residual ≤ 1e-7 and stationarity residual
// ≤ 1e-6 (relative to the problem scale) or the status is kNumericalFailure.
QpResult solve(const QpProblem& problem);

}  // namespace atmpc::qp
