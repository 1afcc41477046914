#include "atmpc/control_core.hpp"

#include <cmath>

#include "atmpc/errors.hpp"

namespace atmpc::control {

using geometry::Polytope;

ParamMatrix make_param_matrix(const Matrix& A, const Matrix& B, int q) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || q < 1 || q > n)
    fail(ErrorCode::kDimMismatch, "make_param_matrix: inconsistent shapes");
  Matrix shadow = Matrix::Zero(n, n - q);
  shadow.topRows(n - q) = Matrix::Identity(n - q, n - q);
  if (n > q && (A.rightCols(n - q) - shadow).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorCode::kBadStructure, "A lacks the observable-canonical identity shadow block");
  ParamMatrix pm;
  pm.n = n;
  pm.m = static_cast<int>(B.cols());
  pm.q = q;
  pm.psi.resize(n, n + pm.m);
  pm.psi << A, B;
  return pm;
}

Vector filter_offset(const Matrix& F, int q) { return vec_rows(F.leftCols(q)); }

Vector z1_forward(const ParamMatrix& psi, const Vector& f) {
  const int n = psi.n, m = psi.m, q = psi.q;
  if (f.size() != q * n) fail(ErrorCode::kDimMismatch, "z1_forward: f length");
  make_param_matrix(psi.A(), psi.B(), q);  // structure check
  Vector p(q * n + m * n);
  p.head(q * n) = vec_rows(psi.psi.leftCols(q)) - f;
  p.tail(m * n) = vec_rows(psi.B());
  return p;
}

ParamMatrix z1_inverse(const Vector& p, const Vector& f, int n, int m, int q) {
  if (p.size() != q * n + m * n || f.size() != q * n) fail(ErrorCode::kDimMismatch, "z1_inverse: lengths");
  ParamMatrix pm;
  pm.n = n;
  pm.m = m;
  pm.q = q;
  pm.psi = Matrix::Zero(n, n + m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) pm.psi(i, j) = p(i * q + j) + f(i * q + j);
    for (int j = 0; j < m; ++j) pm.psi(i, n + j) = p(q * n + i * m + j);
  }
  for (int j = 0; j < n - q; ++j) pm.psi(j, q + j) = 1.0;
  return pm;
}

DareResult dare_gain(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, double tol, int max_iter) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || R.rows() != B.cols())
    fail(ErrorCode::kDimMismatch, "dare_gain: shapes");
  DareResult out;
  Matrix P = Q;
  for (int k = 1; k <= max_iter; ++k) {
    const Matrix BtPA = B.transpose() * P * A;
    const Matrix S = R + B.transpose() * P * B;
    Matrix Pn = Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
    Pn = 0.5 * (Pn + Pn.transpose());
    const double delta = inf_norm(Pn - P);
    P = Pn;
    if (!std::isfinite(delta)) break;
    if (delta <= tol) {
      out.iterations = k;
      out.P = P;
      out.K = -(R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
      return out;
    }
  }
  fail(ErrorCode::kNoConvergence, "Riccati iteration did not converge (estimate not stabilizable?)");
}

Matrix lyapunov_residual(const Matrix& P, const Matrix& K, const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R) {
  const Matrix Acl = A + B * K;
  return P - Acl.transpose() * P * Acl - Q - K.transpose() * R * K;
}

bool schur_stable(const Matrix& M) {
  if (M.rows() != M.cols()) fail(ErrorCode::kDimMismatch, "schur_stable: non-square");
  return spectral_radius(M) < 1.0 - kTolSchur;
}

Criterion1 criterion1_check(const Matrix& Pprev, const Matrix& Kprev, const Matrix& Pnew, const Matrix& Knew,
                            const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  Criterion1 c;
  c.min_eig_a = min_sym_eigenvalue(lyapunov_residual(Pnew, Knew, A, B, Q, R));
  const Matrix Acl = A + B * Knew;
  c.min_eig_b = min_sym_eigenvalue(Pprev - Acl.transpose() * Pnew * Acl - Q - Kprev.transpose() * R * Kprev);
  c.a_holds = c.min_eig_a >= -kTolPsd;
  c.b_holds = c.min_eig_b >= -kTolPsd;
  return c;
}

bool terminal_containments_hold(const TerminalIngredients& term, const Matrix& A, const Matrix& B,
                                const Polytope& Ebar, const Polytope& Xcal, const Polytope& U) {
  const Polytope& S = term.XTS;
  if (S.is_empty()) return false;
  const int n = S.dim();
  if (!geometry::contains(Xcal, S)) return false;
  if (!geometry::contains(U, geometry::affine_image(term.K, S))) return false;
  if (!geometry::is_robust_invariant(A + B * term.K, S, Ebar)) return false;
  // Origin strictly inside: positive slack on every row.
  return (S.b() - S.A() * Vector::Zero(n)).minCoeff() > geometry::kTolGeo;
}

TerminalIngredients terminal_for_gain(const Matrix& P, const Matrix& K, const Matrix& A, const Matrix& B,
                                      const Polytope& Ebar, const Polytope& Xcal, const Polytope& U, int iter_cap) {
  TerminalIngredients out;
  out.P = P;
  out.K = K;
  out.XTS = geometry::max_invariant_set(A + B * K, Ebar, Xcal, U, K, iter_cap);
  out.certified_c = terminal_containments_hold(out, A, B, Ebar, Xcal, U);
  return out;
}

TerminalIngredients synthesize_terminal(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                        const Polytope& Ebar, const Polytope& Xcal, const Polytope& U,
                                        const TerminalIngredients* prev, int iter_cap) {
  if (Xcal.is_empty() || U.is_empty()) fail(ErrorCode::kEmptyTerminalSet, "synthesize_terminal: empty inputs");
  const DareResult dare = dare_gain(A, B, Q, R);
  TerminalIngredients out = terminal_for_gain(dare.P, dare.K, A, B, Ebar, Xcal, U, iter_cap);
  const Criterion1 c = prev ? criterion1_check(prev->P, prev->K, dare.P, dare.K, A, B, Q, R)
                            : criterion1_check(dare.P, dare.K, dare.P, dare.K, A, B, Q, R);
  out.certified_a = c.a_holds;
  out.certified_b = prev ? c.b_holds : true;
  return out;
}

}  // namespace atmpc::control
