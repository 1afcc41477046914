#pragma once

#include <optional>

#include "atmpc/geometry.hpp"
#include "atmpc/linalg.hpp"

namespace atmpc::control {

inline constexpr double kTolPsd = 1e-8;
inline constexpr double kTolSchur = 1e-9;

// ψ = [A | B] with A in observable-canonical form: columns q..n−1 of A are
// [I_{n−q}; 0] exactly.
struct ParamMatrix {
  Matrix psi;
  int n = 0;
  int m = 0;
  int q = 0;

  Matrix A() const { return psi.leftCols(n); }
  Matrix B() const { return psi.rightCols(m); }
};

// Validates the shadow block (tolerance 1e-12) and builds ψ.
ParamMatrix make_param_matrix(const Matrix& A, const Matrix& B, int q);

// The fixed filter offset f = vec(F(:, 0:q)) (row-major vectorization).
Vector filter_offset(const Matrix& F, int q);

// p = [vec(A(:,0:q)) − f ; vec(B)].
Vector z1_forward(const ParamMatrix& psi, const Vector& f);
ParamMatrix z1_inverse(const Vector& p, const Vector& f, int n, int m, int q);

struct DareResult {
  Matrix P;
  Matrix K;
  int iterations = 0;
};

// Stabilizing DARE solution by fixed-point iteration from P₀ = Q;
// K = −(R + BᵀPB)⁻¹BᵀPA. Raises NoConvergence after max_iter steps.
DareResult dare_gain(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, double tol = 1e-10,
                     int max_iter = 10000);

// P − (A+BK)ᵀP(A+BK) − Q − KᵀRK (zero for the DARE pair).
Matrix lyapunov_residual(const Matrix& P, const Matrix& K, const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R);

bool schur_stable(const Matrix& M);

struct Criterion1 {
  bool a_holds = false;
  bool b_holds = false;
  double min_eig_a = 0.0;
  double min_eig_b = 0.0;
};

// (a): residual of the new pair; (b): P_prev − (A+BK_new)ᵀP_new(A+BK_new) − Q − K_prevᵀRK_prev.
Criterion1 criterion1_check(const Matrix& Pprev, const Matrix& Kprev, const Matrix& Pnew, const Matrix& Knew,
                            const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

struct TerminalIngredients {
  Matrix P;
  Matrix K;
  geometry::Polytope XTS;
  bool certified_a = false;
  bool certified_b = false;
  bool certified_c = false;

  bool certified() const { return certified_a && certified_b && certified_c; }
};

// DARE pair plus maximal robust invariant terminal set under disturbance Ebar
// within Xcal ∩ {Kx ∈ U}. Raises EmptyTerminalSet / NoConvergence.
TerminalIngredients synthesize_terminal(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                        const geometry::Polytope& Ebar, const geometry::Polytope& Xcal,
                                        const geometry::Polytope& U, const TerminalIngredients* prev,
                                        int iter_cap = 200);

// Terminal set for a fixed gain (backup path keeps P, K and rebuilds the set).
TerminalIngredients terminal_for_gain(const Matrix& P, const Matrix& K, const Matrix& A, const Matrix& B,
                                      const geometry::Polytope& Ebar, const geometry::Polytope& Xcal,
                                      const geometry::Polytope& U, int iter_cap = 200);

// Re-verifies XTS ⊆ Xcal, K·XTS ⊆ U, Acl·XTS ⊕ Ebar ⊆ XTS and 0 ∈ int XTS.
bool terminal_containments_hold(const TerminalIngredients& term, const Matrix& A, const Matrix& B,
                                const geometry::Polytope& Ebar, const geometry::Polytope& Xcal,
                                const geometry::Polytope& U);

}  // namespace atmpc::control
