#include <cmath>
#include <limits>

#include "atmpc/errors.hpp"
#include "atmpc/geometry.hpp"
#include "atmpc/lp.hpp"

namespace atmpc::geometry {
namespace {

constexpr double kSchurTol = 1e-9;

void require_square(const Matrix& F, int n, const char* where) {
  if (F.rows() != F.cols() || F.rows() != n) fail(ErrorCode::kDimMismatch, std::string(where) + ": matrix shape");
}

// Smallest c ≥ 1 with F(cR) ⊕ W ⊆ cR, applied to absorb vertex-merge
// round-off; returns R unchanged when it already verifies.
Polytope inflate_to_invariance(const Matrix& F, const Polytope& R, const Polytope& W) {
  double c = 1.0;
  for (int i = 0; i < R.num_rows(); ++i) {
    const Vector a = R.A().row(i).transpose();
    const double hw = W.support(a);
    const double gap = R.b()(i) - R.support(F.transpose() * a);
    if (hw <= gap * c) continue;
    if (gap <= 0.0) return R;  // not repairable by scaling; caller re-checks
    c = std::max(c, hw / gap);
  }
  if (c == 1.0) return R;
  return scale(R, c * (1.0 + 1e-12));
}

}  // namespace

bool is_robust_invariant(const Matrix& F, const Polytope& R, const Polytope& W, double tol) {
  require_square(F, R.dim(), "is_robust_invariant");
  if (R.is_empty()) return true;
  const Polytope Rc = complete(R);
  const Polytope Wv = W.is_empty() ? Polytope::point(Vector::Zero(R.dim())) : to_vrep(W);
  for (int i = 0; i < Rc.num_rows(); ++i) {
    const Vector a = Rc.A().row(i).transpose();
    if (Rc.support(F.transpose() * a) + Wv.support(a) > Rc.b()(i) + tol) return false;
  }
  return true;
}

Polytope mrpi_outer(const Matrix& F, const Polytope& W, double eps, int iter_cap, double bloat_ratio) {
  const int n = W.dim();
  require_square(F, n, "mrpi_outer");
  if (spectral_radius(F) >= 1.0 - kSchurTol) fail(ErrorCode::kNotSchurStable, "mrpi_outer: F is not Schur stable");
  if (W.is_empty()) fail(ErrorCode::kEmptySet, "mrpi_outer: empty disturbance set");
  const Polytope Wc = complete(W);
  const double rad = inf_radius(Wc);
  if (rad <= 1e-14) return Polytope::point(Vector::Zero(n));
  if (!contains_point(Wc, Vector::Zero(n))) fail(ErrorCode::kBadStructure, "mrpi_outer: 0 must lie in W");

  // The α-test needs 0 strictly inside W; lower-dimensional or boundary-touching
  // W is enlarged by a small box first (the result stays an outer bound).
  Polytope Wb = Wc;
  const double margin = Wc.b().minCoeff();
  if (margin < 1e-6 * rad) Wb = minkowski_sum(Wc, Polytope::box(n, bloat_ratio * rad));

  const double target = eps / (1.0 + eps);
  Polytope sum = Wb;
  Matrix Fs = F;
  for (int s = 1; s <= iter_cap; ++s) {
    double alpha = 0.0;
    for (int j = 0; j < Wb.num_rows(); ++j) {
      const Vector a = Wb.A().row(j).transpose();
      alpha = std::max(alpha, Wb.support(Fs.transpose() * a) / Wb.b()(j));
    }
    if (alpha <= target) {
      const Polytope R = scale(sum, 1.0 / (1.0 - alpha));
      return inflate_to_invariance(F, R, Wc);
    }
    sum = minkowski_sum(sum, affine_image(Fs, Wb));
    Fs = F * Fs;
  }
  fail(ErrorCode::kIterationCap, "mrpi_outer: iteration cap reached");
}

Polytope max_invariant_set(const Matrix& Acl, const Polytope& W, const Polytope& X, const Polytope& U,
                           const Matrix& K, int iter_cap) {
  const int n = X.dim();
  require_square(Acl, n, "max_invariant_set");
  if (K.cols() != n || K.rows() != U.dim()) fail(ErrorCode::kDimMismatch, "max_invariant_set: K shape");
  if (X.is_empty() || U.is_empty()) fail(ErrorCode::kEmptyTerminalSet, "max_invariant_set: empty constraint set");
  const Polytope Xh = to_hrep(X), Uh = to_hrep(U);
  const Polytope Wv = W.is_empty() ? Polytope::point(Vector::Zero(n)) : to_vrep(W);

  const int nb = Xh.num_rows() + Uh.num_rows();
  Matrix H(nb, n);
  Vector h(nb);
  H << Xh.A(), Uh.A() * K;
  h << Xh.b(), Uh.b();

  // Current description of S_k, grown by non-redundant rows only.
  Polytope S0 = Polytope::from_halfspaces(H, h);
  if (S0.is_empty()) fail(ErrorCode::kEmptyTerminalSet, "state/input constraint intersection is empty");
  Matrix SA = S0.A();
  Vector Sb = S0.b();
  if (!lp::chebyshev_center(SA, Sb).feasible) fail(ErrorCode::kEmptyTerminalSet, "S0 empty");

  Matrix Apow = Matrix::Identity(n, n);
  Vector offset = Vector::Zero(nb);
  for (int k = 1; k <= iter_cap; ++k) {
    for (int r = 0; r < nb; ++r) offset(r) += Wv.support(Apow.transpose() * H.row(r).transpose());
    Apow = Acl * Apow;
    bool added = false;
    for (int r = 0; r < nb; ++r) {
      Vector a = (H.row(r) * Apow).transpose();
      double b = h(r) - offset(r);
      const double nrm = a.norm();
      if (nrm <= 1e-12) {
        if (b < -kTolGeo) fail(ErrorCode::kEmptyTerminalSet, "disturbance exceeds constraints");
        continue;
      }
      a /= nrm;
      b /= nrm;
      const lp::LpResult lr = lp::maximize(a, SA, Sb);
      if (lr.status == lp::LpStatus::kInfeasible) fail(ErrorCode::kEmptyTerminalSet, "fixed point emptied");
      if (lr.status == lp::LpStatus::kOptimal && lr.value <= b + kTolGeo) continue;
      SA.conservativeResize(SA.rows() + 1, Eigen::NoChange);
      Sb.conservativeResize(Sb.size() + 1);
      SA.row(SA.rows() - 1) = a.transpose();
      Sb(Sb.size() - 1) = b;
      added = true;
    }
    if (!added) {
      const Polytope S = complete(Polytope::from_halfspaces(SA, Sb));
      if (S.is_empty()) fail(ErrorCode::kEmptyTerminalSet, "terminal set is empty");
      return S;
    }
    if (!lp::chebyshev_center(SA, Sb).feasible) fail(ErrorCode::kEmptyTerminalSet, "fixed point emptied");
  }
  fail(ErrorCode::kIterationCap, "max_invariant_set: iteration cap reached");
}

}  // namespace atmpc::geometry
