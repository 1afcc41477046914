#pragma once

#include <optional>
#include <vector>

#include "atmpc/control_core.hpp"
#include "atmpc/geometry.hpp"
#include "atmpc/qp.hpp"

namespace atmpc::tube {

using geometry::Polytope;

struct TubeConfig {
  int N = 10;
  Matrix Q;
  Matrix R;
  double eps_rpi = 1e-3;    // accuracy of the filter-error RPI sets
  double eps_shape = 1e-2;  // accuracy of the tube shape set
  double shape_bloat = 1e-2;
  int max_shape_vertices = 16;
  // Subtracted from every hard state/input row so applied inputs satisfy 𝕌
  // without relying on solver tolerances.
  double hard_backoff = 1e-9;
  // The regressor-error RPI set is recomputed only when Π moved by more than this.
  double rpi_recompute_gap = 1e-6;
  int terminal_iter_cap = 200;
};

// Plant-side constant data the tightening needs.
struct TubeModel {
  Matrix F;
  Matrix C;
  int n = 0;
  int m = 0;
  int q = 0;
  Polytope X;
  Polytope U;
  Polytope D;
};

// Cached RPI sets; persist across steps so tightening stays monotone.
struct RpiCache {
  std::optional<Polytope> D_rpi;
  std::optional<Polytope> Dyu;
  std::optional<Polytope> Dyu_rpi;
  int recomputations = 0;
};

// Everything the QP needs except the shape set and terminal ingredients.
struct TighteningData {
  int t = 0;
  Matrix A_hat;
  Matrix B_hat;
  Polytope Dyu;                   // regressor error set at time t
  Polytope Xtilde0;               // X̃₀ as a translate of the current initial set
  std::vector<Polytope> Xtilde;   // i = 0..N
  std::vector<Polytope> Xhat;     // 𝕏 ⊖ X̃_i, i = 0..N
  Polytope rpi_sum;               // 𝔇^RPI ⊕ 𝔻^RPI
  Polytope Xbar;                  // outer bound on all predicted filter errors
  Polytope Xcal;                  // terminal state constraint
  std::vector<Polytope> E_pred;   // (Â − F) X̃_i, i = 0..N−1
  Polytope E_bar;                 // terminal-stage model-error set
  Polytope E_hat;                 // model-error set the shape must absorb
};

// Regressor error set: hull over vertex triples of Y(y)·p̃ with y ∈ C𝕏,
// u ∈ 𝕌, p̃ ∈ Π − p̂.
Polytope regressor_error_set(const TubeModel& model, const Polytope& Pi, const Vector& p_hat);

TighteningData build_tightening(const TubeModel& model, const TubeConfig& cfg, const Matrix& A_hat,
                                const Matrix& B_hat, const Vector& p_hat, const Polytope& Pi,
                                const Polytope& X0set, const Vector& x0_hat, int t, RpiCache& cache);

struct ShapeSet {
  Polytope G;
  int removed_vertices = 0;
  double rescale = 1.0;
};

// Acl·𝔾 ⊕ Ê ⊆ 𝔾 with at most cfg.max_shape_vertices vertices.
ShapeSet build_shape_set(const Matrix& Acl, const Polytope& E_hat, const TubeConfig& cfg);

// Decision-vector layout: α_0..α_N, β_0..β_N, u_{i,j} for i < N, j < H.
struct QpLayout {
  int n = 0;
  int m = 0;
  int N = 0;
  int H = 0;

  int alpha(int i) const { return i * n; }
  int beta(int i) const { return (N + 1) * n + i; }
  int u(int i, int j) const { return (N + 1) * (n + 1) + (i * H + j) * m; }
  int size() const { return (N + 1) * (n + 1) + N * H * m; }
};

struct TubeQp {
  QpLayout layout;
  qp::QpProblem problem;
};

TubeQp assemble_qp(const TubeModel& model, const TubeConfig& cfg, const TighteningData& td, const Polytope& G,
                   const control::TerminalIngredients& term, const Vector& x_hat);

struct TubeSolution {
  std::vector<Vector> alpha;               // N + 1
  Vector beta;                             // N + 1
  std::vector<std::vector<Vector>> u;      // [N][H]
  double cost = 0.0;                       // recomputed from the variables
  double qp_objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
};

Vector pack(const QpLayout& layout, const TubeSolution& sol);
TubeSolution unpack(const QpLayout& layout, const Vector& x);

// Stage and terminal cost of a tube as a function of its vertices.
double tube_cost(const TubeSolution& sol, const Polytope& G, const Matrix& Q, const Matrix& R, const Matrix& P);

// Largest row violation of A x ≤ b (negative when strictly feasible).
double max_row_violation(const qp::QpProblem& problem, const Vector& x);

// Solves the assembled QP; std::nullopt unless the solver reports optimal.
std::optional<TubeSolution> solve_tube(const TubeQp& tq, const Polytope& G, const Matrix& Q, const Matrix& R,
                                       const Matrix& P, qp::QpStatus* status_out = nullptr);

struct ExtractedInput {
  Vector u;
  Vector weights;
  double residual = 0.0;
};

// Convex weights τ with Σ τ_j (α₀ + β₀ g_j) = x̂ (minimum norm), and
// u = Σ τ_j u_{0,j}. Raises PointOutsideTube when no such weights exist.
ExtractedInput extract_input(const TubeSolution& sol, const Polytope& G, const Vector& x_hat);

// Shifted previous solution closed by the terminal gain; candidate for the
// next QP when the estimates stay frozen.
TubeSolution shifted_candidate(const TubeSolution& prev, const Polytope& G, const Matrix& A_hat,
                               const Matrix& B_hat, const Matrix& K, const Polytope& E_bar);

}  // namespace atmpc::tube
