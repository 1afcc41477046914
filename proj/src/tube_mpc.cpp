#include "atmpc/tube_mpc.hpp"

#include <cmath>
#include <limits>

#include "atmpc/errors.hpp"

namespace atmpc::tube {

using namespace geometry;

namespace {

Polytope image_power(const Matrix& F, int k, const Polytope& S) {
  Matrix Fk = Matrix::Identity(F.rows(), F.cols());
  for (int i = 0; i < k; ++i) Fk = F * Fk;
  return affine_image(Fk, S);
}

// Row-wise scale factor c with Acl(cG) ⊕ W ⊆ cG; +∞ when no scaling works.
double invariance_scale(const Matrix& Acl, const Polytope& G, const Polytope& W) {
  double c = 0.0;
  for (int r = 0; r < G.num_rows(); ++r) {
    const Vector a = G.A().row(r).transpose();
    const double gap = G.b()(r) - G.support(Acl.transpose() * a);
    const double hw = W.support(a);
    if (gap <= 0.0) {
      if (hw > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    c = std::max(c, hw / gap);
  }
  return c;
}

}  // namespace

Polytope regressor_error_set(const TubeModel& model, const Polytope& Pi, const Vector& p_hat) {
  const int n = model.n;
  const Polytope Y = to_vrep(affine_image(model.C, model.X));
  const Polytope Uv = to_vrep(model.U);
  const Polytope Pv = to_vrep(Pi);
  const int count = Y.num_vertices() * Uv.num_vertices() * Pv.num_vertices();
  Matrix pts(n, count);
  int k = 0;
  for (int a = 0; a < Y.num_vertices(); ++a) {
    for (int b = 0; b < Uv.num_vertices(); ++b) {
      Matrix reg(n, model.q * n + model.m * n);
      reg << kron_identity_row(n, Y.V().col(a)), kron_identity_row(n, Uv.V().col(b));
      for (int c = 0; c < Pv.num_vertices(); ++c) pts.col(k++) = reg * (Pv.V().col(c) - p_hat);
    }
  }
  return Polytope::from_vertices(pts);
}

TighteningData build_tightening(const TubeModel& model, const TubeConfig& cfg, const Matrix& A_hat,
                                const Matrix& B_hat, const Vector& p_hat, const Polytope& Pi,
                                const Polytope& X0set, const Vector& x0_hat, int t, RpiCache& cache) {
  const Matrix& F = model.F;
  const int N = cfg.N;
  if (N < 1) fail(ErrorCode::kInvalidScenario, "horizon must be at least 1");
  TighteningData td;
  td.t = t;
  td.A_hat = A_hat;
  td.B_hat = B_hat;
  td.Dyu = regressor_error_set(model, Pi, p_hat);

  if (!cache.D_rpi) cache.D_rpi = mrpi_outer(F, model.D, cfg.eps_rpi);
  if (!cache.Dyu_rpi || !contains(*cache.Dyu, td.Dyu)) {
    cache.Dyu_rpi = mrpi_outer(F, td.Dyu, cfg.eps_rpi);
    cache.Dyu = td.Dyu;
    ++cache.recomputations;
  } else if (hausdorff(*cache.Dyu, td.Dyu) > cfg.rpi_recompute_gap) {
    // The old set stays RPI for the smaller regressor error; only adopt the
    // fresh one when it does not enlarge the tightening.
    const Polytope fresh = mrpi_outer(F, td.Dyu, cfg.eps_rpi);
    if (contains(*cache.Dyu_rpi, fresh)) cache.Dyu_rpi = fresh;
    cache.Dyu = td.Dyu;
    ++cache.recomputations;
  }
  td.rpi_sum = minkowski_sum(*cache.Dyu_rpi, *cache.D_rpi);

  const Polytope W = minkowski_sum(td.Dyu, model.D);
  td.Xtilde0 = translate(X0set, -x0_hat);
  Polytope S = td.Xtilde0;
  for (int k = 0; k < t; ++k) S = minkowski_sum(affine_image(F, S), W);
  td.Xtilde.push_back(S);
  for (int i = 1; i <= N; ++i) td.Xtilde.push_back(minkowski_sum(affine_image(F, td.Xtilde.back()), W));

  for (int i = 0; i <= N; ++i) {
    Polytope Xh = pontryagin_diff(model.X, td.Xtilde[i]);
    if (Xh.is_empty()) fail(ErrorCode::kEmptyTightenedSet, "tightened state set is empty at stage " + std::to_string(i));
    td.Xhat.push_back(std::move(Xh));
  }

  std::vector<Polytope> transient;
  Polytope Fk = image_power(F, t, td.Xtilde0);
  Polytope F_last;  // F^{t+N−1} X̃₀
  for (int i = 0; i <= N; ++i) {
    transient.push_back(Fk);
    if (i == N - 1) F_last = Fk;
    if (i < N) Fk = affine_image(F, Fk);
  }
  td.Xbar = minkowski_sum(convex_hull(transient), td.rpi_sum);
  td.Xcal = pontryagin_diff(model.X, minkowski_sum(transient.back(), td.rpi_sum));
  if (td.Xcal.is_empty()) fail(ErrorCode::kEmptyTightenedSet, "terminal state constraint is empty");

  const Matrix Am = A_hat - F;
  for (int i = 0; i < N; ++i) td.E_pred.push_back(affine_image(Am, td.Xtilde[i]));
  td.E_bar = affine_image(Am, minkowski_sum(F_last, td.rpi_sum));
  td.E_hat = affine_image(Am, td.Xbar);
  return td;
}

ShapeSet build_shape_set(const Matrix& Acl, const Polytope& E_hat, const TubeConfig& cfg) {
  const int n = E_hat.dim();
  if (!control::schur_stable(Acl)) fail(ErrorCode::kNotSchurStable, "shape set: closed loop is not Schur stable");
  Polytope W = complete(E_hat);
  if (inf_radius(W) <= 1e-12) W = Polytope::box(n, 1e-6);
  ShapeSet out;
  out.G = mrpi_outer(Acl, W, cfg.eps_shape, 200, cfg.shape_bloat);

  // Vertex reduction: drop the vertex closest to the hull of the others, then
  // rescale the reduced set back to invariance.
  while (out.G.num_vertices() > cfg.max_shape_vertices) {
    const Matrix& V = out.G.V();
    const int nv = static_cast<int>(V.cols());
    double best = std::numeric_limits<double>::infinity();
    Polytope best_set;
    for (int j = 0; j < nv; ++j) {
      Matrix rest(n, nv - 1);
      for (int k = 0, c = 0; k < nv; ++k)
        if (k != j) rest.col(c++) = V.col(k);
      Polytope cand = Polytope::from_vertices(rest);
      if (cand.num_vertices() < n + 1) continue;
      const double d = max_violation(cand, V.col(j));
      if (d < best) {
        best = d;
        best_set = std::move(cand);
      }
    }
    if (!std::isfinite(best)) break;
    const double c = invariance_scale(Acl, best_set, W);
    if (!std::isfinite(c) || c <= 0.0) break;
    out.G = scale(best_set, c * (1.0 + 1e-9));
    out.rescale = c;
    ++out.removed_vertices;
  }
  if (!is_robust_invariant(Acl, out.G, W))
    fail(ErrorCode::kNumericalFailure, "shape set failed its invariance re-check");
  return out;
}

TubeQp assemble_qp(const TubeModel& model, const TubeConfig& cfg, const TighteningData& td, const Polytope& G,
                   const control::TerminalIngredients& term, const Vector& x_hat) {
  const int n = model.n, m = model.m, N = cfg.N;
  const Polytope Gc = complete(G);
  const Matrix& Gv = Gc.V();
  const int H = static_cast<int>(Gv.cols());
  if (static_cast<int>(td.Xhat.size()) < N || static_cast<int>(td.E_pred.size()) < N)
    fail(ErrorCode::kDimMismatch, "assemble_qp: tightening shorter than the horizon");

  TubeQp tq;
  QpLayout& L = tq.layout;
  L.n = n;
  L.m = m;
  L.N = N;
  L.H = H;
  const int nv = L.size();

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> rhs;
  auto row = [&]() { return static_cast<int>(rhs.size()); };

  // β_i ≥ 0
  for (int i = 0; i <= N; ++i) {
    trip.emplace_back(row(), L.beta(i), -1.0);
    rhs.push_back(0.0);
  }
  // x̂ ∈ α₀ ⊕ β₀ 𝔾
  for (int r = 0; r < Gc.num_rows(); ++r) {
    for (int k = 0; k < n; ++k) trip.emplace_back(row(), L.alpha(0) + k, -Gc.A()(r, k));
    trip.emplace_back(row(), L.beta(0), -Gc.b()(r));
    rhs.push_back(-Gc.A().row(r).dot(x_hat));
  }
  const Polytope Uh = to_hrep(model.U);
  for (int i = 0; i < N; ++i) {
    const Polytope Xh = to_hrep(td.Xhat[i]);
    for (int j = 0; j < H; ++j) {
      for (int r = 0; r < Xh.num_rows(); ++r) {
        for (int k = 0; k < n; ++k) trip.emplace_back(row(), L.alpha(i) + k, Xh.A()(r, k));
        trip.emplace_back(row(), L.beta(i), Xh.A().row(r).dot(Gv.col(j)));
        rhs.push_back(Xh.b()(r) - cfg.hard_backoff);
      }
      for (int r = 0; r < Uh.num_rows(); ++r) {
        for (int k = 0; k < m; ++k) trip.emplace_back(row(), L.u(i, j) + k, Uh.A()(r, k));
        rhs.push_back(Uh.b()(r) - cfg.hard_backoff);
      }
    }
  }
  // Terminal tube inside the terminal set.
  const Polytope Th = to_hrep(term.XTS);
  for (int j = 0; j < H; ++j) {
    for (int r = 0; r < Th.num_rows(); ++r) {
      for (int k = 0; k < n; ++k) trip.emplace_back(row(), L.alpha(N) + k, Th.A()(r, k));
      trip.emplace_back(row(), L.beta(N), Th.A().row(r).dot(Gv.col(j)));
      rhs.push_back(Th.b()(r) - cfg.hard_backoff);
    }
  }
  // Â(α_i + β_i g_j) + B̂ u_ij ⊕ ℰ_i ⊆ α_{i+1} ⊕ β_{i+1} 𝔾
  for (int i = 0; i < N; ++i) {
    const Polytope Ev = to_vrep(td.E_pred[i]);
    for (int r = 0; r < Gc.num_rows(); ++r) {
      const Vector a = Gc.A().row(r).transpose();
      const Vector aA = td.A_hat.transpose() * a;
      const Vector aB = td.B_hat.transpose() * a;
      const double he = Ev.support(a);
      for (int j = 0; j < H; ++j) {
        for (int k = 0; k < n; ++k) {
          trip.emplace_back(row(), L.alpha(i) + k, aA(k));
          trip.emplace_back(row(), L.alpha(i + 1) + k, -a(k));
        }
        trip.emplace_back(row(), L.beta(i), aA.dot(Gv.col(j)));
        trip.emplace_back(row(), L.beta(i + 1), -Gc.b()(r));
        for (int k = 0; k < m; ++k) trip.emplace_back(row(), L.u(i, j) + k, aB(k));
        rhs.push_back(-he);
      }
    }
  }

  qp::QpProblem& P = tq.problem;
  P.A_ineq.resize(row(), nv);
  P.A_ineq.setFromTriplets(trip.begin(), trip.end());
  P.b_ineq = Eigen::Map<const Vector>(rhs.data(), row());
  P.A_eq.resize(0, nv);
  P.b_eq.resize(0);
  P.g = Vector::Zero(nv);

  // ½xᵀHx equals Σ_j Σ_i ‖α_i + β_i g_j‖²_{Q or P} + ‖u_ij‖²_R.
  P.H = Matrix::Zero(nv, nv);
  const Vector gsum = Gv.rowwise().sum();
  for (int i = 0; i <= N; ++i) {
    const Matrix& W = i < N ? cfg.Q : term.P;
    double ggW = 0.0;
    for (int j = 0; j < H; ++j) ggW += Gv.col(j).dot(W * Gv.col(j));
    P.H.block(L.alpha(i), L.alpha(i), n, n) += 2.0 * H * W;
    const Vector cross = 2.0 * W * gsum;
    P.H.block(L.alpha(i), L.beta(i), n, 1) += cross;
    P.H.block(L.beta(i), L.alpha(i), 1, n) += cross.transpose();
    P.H(L.beta(i), L.beta(i)) += 2.0 * ggW;
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < H; ++j) P.H.block(L.u(i, j), L.u(i, j), m, m) += 2.0 * cfg.R;
  // Tiny ridge keeps the factorization well posed when 𝔾 is small.
  const double ridge = 1e-12 * std::max(1.0, P.H.diagonal().maxCoeff());
  P.H.diagonal().array() += ridge;
  return tq;
}

Vector pack(const QpLayout& L, const TubeSolution& sol) {
  Vector x = Vector::Zero(L.size());
  for (int i = 0; i <= L.N; ++i) {
    x.segment(L.alpha(i), L.n) = sol.alpha[i];
    x(L.beta(i)) = sol.beta(i);
  }
  for (int i = 0; i < L.N; ++i)
    for (int j = 0; j < L.H; ++j) x.segment(L.u(i, j), L.m) = sol.u[i][j];
  return x;
}

TubeSolution unpack(const QpLayout& L, const Vector& x) {
  TubeSolution sol;
  sol.beta.resize(L.N + 1);
  for (int i = 0; i <= L.N; ++i) {
    sol.alpha.push_back(x.segment(L.alpha(i), L.n));
    sol.beta(i) = x(L.beta(i));
  }
  sol.u.assign(L.N, std::vector<Vector>(L.H));
  for (int i = 0; i < L.N; ++i)
    for (int j = 0; j < L.H; ++j) sol.u[i][j] = x.segment(L.u(i, j), L.m);
  return sol;
}

double tube_cost(const TubeSolution& sol, const Polytope& G, const Matrix& Q, const Matrix& R, const Matrix& P) {
  const Matrix& Gv = G.V();
  const int N = static_cast<int>(sol.u.size());
  double cost = 0.0;
  for (int i = 0; i <= N; ++i) {
    const Matrix& W = i < N ? Q : P;
    for (int j = 0; j < Gv.cols(); ++j) {
      const Vector z = sol.alpha[i] + sol.beta(i) * Gv.col(j);
      cost += z.dot(W * z);
      if (i < N) cost += sol.u[i][j].dot(R * sol.u[i][j]);
    }
  }
  return cost;
}

double max_row_violation(const qp::QpProblem& problem, const Vector& x) {
  if (problem.A_ineq.rows() == 0) return -std::numeric_limits<double>::infinity();
  return (problem.A_ineq * x - problem.b_ineq).maxCoeff();
}

std::optional<TubeSolution> solve_tube(const TubeQp& tq, const Polytope& G, const Matrix& Q, const Matrix& R,
                                       const Matrix& P, qp::QpStatus* status_out) {
  const qp::QpResult res = qp::solve(tq.problem);
  if (status_out) *status_out = res.status;
  if (res.status != qp::QpStatus::kOptimal) return std::nullopt;
  TubeSolution sol = unpack(tq.layout, res.x);
  sol.qp_objective = res.objective;
  sol.cost = tube_cost(sol, complete(G), Q, R, P);
  sol.max_violation = max_row_violation(tq.problem, res.x);
  sol.iterations = res.iterations;
  return sol;
}

ExtractedInput extract_input(const TubeSolution& sol, const Polytope& G, const Vector& x_hat) {
  const Polytope Gc = complete(G);
  const Matrix& Gv = Gc.V();
  const int n = static_cast<int>(x_hat.size());
  const int H = static_cast<int>(Gv.cols());
  // Work in shape coordinates: Σ τ_j g_j = (x̂ − α₀)/β₀. The columns α₀ + β₀ g_j
  // are nearly parallel for small β₀, which ruins the equality system.
  const double b0 = sol.beta(0);
  const bool degenerate = !(b0 > 1e-12);
  const Vector z = degenerate ? Vector::Zero(n) : Vector((x_hat - sol.alpha[0]) / b0);

  qp::QpProblem p;
  p.H = Matrix::Identity(H, H);
  p.g = Vector::Zero(H);
  p.A_eq.resize(n + 1, H);
  p.A_eq << Gv, Matrix::Ones(1, H);
  p.b_eq.resize(n + 1);
  p.b_eq << z, 1.0;
  p.A_ineq.resize(H, H);
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < H; ++j) trip.emplace_back(j, j, -1.0);
  p.A_ineq.setFromTriplets(trip.begin(), trip.end());
  p.b_ineq = Vector::Zero(H);

  qp::QpResult res = qp::solve(p);
  if (res.status != qp::QpStatus::kOptimal) {
    // z on the boundary of 𝔾 within round-off makes the equality system
    // infeasible; project z onto 𝔾 instead (tiny ridge keeps H definite).
    qp::QpProblem proj;
    const Matrix GtG = Gv.transpose() * Gv;
    proj.H = GtG + 1e-12 * std::max(1.0, GtG.diagonal().maxCoeff()) * Matrix::Identity(H, H);
    proj.g = -Gv.transpose() * z;
    proj.A_eq = Matrix::Ones(1, H);
    proj.b_eq = Vector::Ones(1);
    proj.A_ineq = p.A_ineq;
    proj.b_ineq = p.b_ineq;
    res = qp::solve(proj);
  }
  Vector tau = res.status == qp::QpStatus::kOptimal ? res.x : Vector::Constant(H, 1.0 / H);
  tau = tau.cwiseMax(0.0);
  const double total = tau.sum();
  if (!(total > 0.0)) fail(ErrorCode::kPointOutsideTube, "no convex weights for the current estimate");
  tau /= total;

  ExtractedInput out;
  out.weights = tau;
  const Vector recon = sol.alpha[0] + b0 * (Gv * tau);
  out.residual = (recon - x_hat).cwiseAbs().maxCoeff();
  if (out.residual > 1e-6 * std::max(1.0, x_hat.cwiseAbs().maxCoeff()))
    fail(ErrorCode::kPointOutsideTube, "estimate lies outside the first tube cross-section");
  const int m = static_cast<int>(sol.u[0][0].size());
  out.u = Vector::Zero(m);
  for (int j = 0; j < H; ++j) out.u += tau(j) * sol.u[0][j];
  return out;
}

TubeSolution shifted_candidate(const TubeSolution& prev, const Polytope& G, const Matrix& A_hat,
                               const Matrix& B_hat, const Matrix& K, const Polytope& E_bar) {
  const Polytope Gc = complete(G);
  const Matrix& Gv = Gc.V();
  const int N = static_cast<int>(prev.u.size());
  const int H = static_cast<int>(Gv.cols());
  const Matrix Acl = A_hat + B_hat * K;
  TubeSolution out;
  out.beta.resize(N + 1);
  for (int i = 0; i < N; ++i) {
    out.alpha.push_back(prev.alpha[i + 1]);
    out.beta(i) = prev.beta(i + 1);
  }
  out.alpha.push_back(Acl * prev.alpha[N]);
  // Smallest β with Acl β_N 𝔾 ⊕ Ē ⊆ β 𝔾.
  double bN = 0.0;
  const Polytope Ev = to_vrep(E_bar);
  for (int r = 0; r < Gc.num_rows(); ++r) {
    const Vector a = Gc.A().row(r).transpose();
    bN = std::max(bN, (prev.beta(N) * Gc.support(Acl.transpose() * a) + Ev.support(a)) / Gc.b()(r));
  }
  out.beta(N) = bN;
  out.u.assign(N, std::vector<Vector>(H));
  for (int i = 0; i + 1 < N; ++i) out.u[i] = prev.u[i + 1];
  for (int j = 0; j < H; ++j) out.u[N - 1][j] = K * (prev.alpha[N] + prev.beta(N) * Gv.col(j));
  return out;
}

}  // namespace atmpc::tube
