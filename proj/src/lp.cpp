#include "atmpc/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "atmpc/errors.hpp"

namespace atmpc::lp {
namespace {

constexpr double kPivotTol = 1e-11;

// Dense tableau for min costᵀy s.t. T y = rhs, y ≥ 0 with an explicit basis.
// Row `rows` holds reduced costs; column `cols` holds the rhs (objective in
// the cost row, negated).
class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), T_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  double& at(int r, int c) { return T_(r, c); }
  double at(int r, int c) const { return T_(r, c); }
  double& rhs(int r) { return T_(r, cols_); }
  double rhs(int r) const { return T_(r, cols_); }
  double reduced(int c) const { return T_(rows_, c); }
  int basis(int r) const { return basis_[r]; }
  void set_basis(int r, int c) { basis_[r] = c; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void set_costs(const Vector& cost) {
    T_.row(rows_).setZero();
    T_.block(rows_, 0, 1, cols_) = cost.transpose();
    for (int r = 0; r < rows_; ++r) {
      const double cb = cost(basis_[r]);
      if (cb != 0.0) T_.row(rows_) -= cb * T_.row(r);
    }
  }

  void pivot(int pr, int pc) {
    const double p = T_(pr, pc);
    T_.row(pr) /= p;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = T_(r, pc);
      if (f != 0.0) T_.row(r) -= f * T_.row(pr);
    }
    basis_[pr] = pc;
  }

  // Runs Bland's-rule simplex over columns [0, enter_limit). Returns false on
  // an unbounded ray.
  bool optimize(int enter_limit, double rc_tol, int& pivots) {
    const int cap = 50 * (rows_ + cols_) + 1000;
    for (int it = 0; it < cap; ++it) {
      int pc = -1;
      for (int c = 0; c < enter_limit; ++c) {
        if (reduced(c) < -rc_tol) {
          pc = c;
          break;
        }
      }
      if (pc < 0) return true;
      int pr = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows_; ++r) {
        const double a = T_(r, pc);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && pr >= 0 && basis_[r] < basis_[pr])) {
          best = ratio;
          pr = r;
        }
      }
      if (pr < 0) return false;
      pivot(pr, pc);
      ++pivots;
    }
    fail(ErrorCode::kIterationCap, "simplex pivot cap reached");
  }

 private:
  int rows_;
  int cols_;
  Matrix T_;
  std::vector<int> basis_;
};

}  // namespace

LpResult maximize(const Vector& c, const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  LpResult res;
  res.x = Vector::Zero(d);
  if (m == 0) {
    res.status = c.isZero(0.0) ? LpStatus::kOptimal : LpStatus::kUnbounded;
    return res;
  }
  if (d == 0) {
    res.status = (b.minCoeff() >= -1e-12) ? LpStatus::kOptimal : LpStatus::kInfeasible;
    return res;
  }

  const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double cscale = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double rc_tol = 1e-12 * bscale;

  // Dual: rows = d equality constraints Aᵀy = c; columns = m duals + d artificials.
  Tableau tab(d, m + d);
  std::vector<double> flip(d, 1.0);
  for (int k = 0; k < d; ++k) {
    flip[k] = c(k) < 0 ? -1.0 : 1.0;
    for (int j = 0; j < m; ++j) tab.at(k, j) = flip[k] * A(j, k);
    tab.at(k, m + k) = 1.0;
    tab.rhs(k) = flip[k] * c(k);
    tab.set_basis(k, m + k);
  }

  Vector phase1 = Vector::Zero(m + d);
  phase1.tail(d).setOnes();
  tab.set_costs(phase1);
  tab.optimize(m, 1e-13, res.pivots);
  const double infeas = -tab.reduced(m + d);  // remaining artificial mass
  if (infeas > 1e-9 * cscale) {
    // Dual infeasible: primal is unbounded or infeasible. Decide with c = 0.
    const LpResult feas = maximize(Vector::Zero(d), A, b);
    res.status = feas.status == LpStatus::kOptimal ? LpStatus::kUnbounded : LpStatus::kInfeasible;
    res.pivots += feas.pivots;
    return res;
  }

  // Drive zero-level artificials out of the basis where possible.
  for (int r = 0; r < d; ++r) {
    if (tab.basis(r) < m) continue;
    int best = -1;
    double mag = kPivotTol;
    for (int j = 0; j < m; ++j) {
      if (std::abs(tab.at(r, j)) > mag) {
        mag = std::abs(tab.at(r, j));
        best = j;
      }
    }
    if (best >= 0) {
      tab.pivot(r, best);
      ++res.pivots;
    }
  }

  Vector phase2 = Vector::Zero(m + d);
  phase2.head(m) = b;
  tab.set_costs(phase2);
  if (!tab.optimize(m, rc_tol, res.pivots)) {
    res.status = LpStatus::kInfeasible;  // dual unbounded
    return res;
  }

  // Simplex multipliers of the dual are the primal solution.
  for (int k = 0; k < d; ++k) res.x(k) = -flip[k] * tab.reduced(m + k);
  res.value = c.dot(res.x);
  res.status = LpStatus::kOptimal;
  return res;
}

Chebyshev chebyshev_center(const Matrix& A, const Vector& b, double r_cap) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  Chebyshev out;
  if (m == 0) {
    out.feasible = true;
    out.radius = r_cap;
    out.center = Vector::Zero(d);
    return out;
  }
  Matrix Ab(m + 1, d + 1);
  Vector bb(m + 1);
  for (int i = 0; i < m; ++i) {
    Ab.row(i).head(d) = A.row(i);
    Ab(i, d) = A.row(i).norm();
    bb(i) = b(i);
  }
  Ab.row(m).setZero();
  Ab(m, d) = 1.0;
  bb(m) = r_cap;
  Vector c = Vector::Zero(d + 1);
  c(d) = 1.0;
  const LpResult r = maximize(c, Ab, bb);
  if (r.status != LpStatus::kOptimal) {
    out.feasible = false;
    out.radius = -std::numeric_limits<double>::infinity();
    out.center = Vector::Zero(d);
    return out;
  }
  out.radius = r.x(d);
  out.center = r.x.head(d);
  out.feasible = out.radius >= -1e-9;
  return out;
}

}  // namespace atmpc::lp
