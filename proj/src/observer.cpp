#include "atmpc/observer.hpp"

#include "atmpc/errors.hpp"

namespace atmpc::observer {

using geometry::AffineChart;

namespace {

// Full-dimensional point sets get the identity chart so local coordinates
// coincide with the ambient ones.
AffineChart chart_or_identity(const Matrix& points) {
  AffineChart ch = geometry::affine_chart(points);
  const int n = ch.ambient_dim();
  if (ch.chart_dim() == n) {
    ch.origin = Vector::Zero(n);
    ch.basis = Matrix::Identity(n, n);
    ch.normals = Matrix(n, 0);
  }
  return ch;
}

std::vector<control::ParamMatrix> psi_vertices_of(const ObserverModel& model, const Polytope& Pi) {
  std::vector<control::ParamMatrix> out;
  const auto& c = model.cfg;
  for (int j = 0; j < Pi.num_vertices(); ++j) out.push_back(control::z1_inverse(Pi.V().col(j), model.f, c.n, c.m, c.q));
  return out;
}

}  // namespace

Matrix ObserverModel::C() const {
  Matrix C = Matrix::Zero(cfg.q, cfg.n);
  C.leftCols(cfg.q) = Matrix::Identity(cfg.q, cfg.q);
  return C;
}

InitialSetCheck ensure_invariant_initial_set(const Matrix& F, const Polytope& X0, const Vector& xhat0, int iter_cap) {
  InitialSetCheck out;
  Polytope S = geometry::translate(X0, -xhat0);
  if (geometry::contains(S, geometry::affine_image(F, S))) {
    out.X0 = geometry::complete(X0);
    return out;
  }
  // co(S ∪ FS ∪ F²S ∪ …) is F-invariant once F^k S falls inside; it is the
  // smallest invariant set containing S.
  out.was_invariant = false;
  for (int k = 1; k <= iter_cap; ++k) {
    S = geometry::convex_hull(S, geometry::affine_image(F, S));
    out.hull_iterations = k;
    if (geometry::contains(S, geometry::affine_image(F, S))) {
      out.X0 = geometry::translate(S, xhat0);
      return out;
    }
  }
  fail(ErrorCode::kInvalidScenario, "initial-state set cannot be made F-invariant");
}

ObserverModel make_model(const ObserverConfig& cfg, const std::vector<control::ParamMatrix>& psi0_vertices,
                         const Polytope& X00) {
  ObserverModel model;
  model.cfg = cfg;
  if (cfg.F.rows() != cfg.n || cfg.F.cols() != cfg.n) fail(ErrorCode::kDimMismatch, "observer: F shape");
  if (!control::schur_stable(cfg.F)) fail(ErrorCode::kNotSchurStable, "observer: F is not Schur stable");
  if (!(cfg.sigma > 0.0 && cfg.sigma < 1.0)) fail(ErrorCode::kInvalidScenario, "observer: sigma must lie in (0,1)");
  if (!(cfg.kappa > 0.0 && cfg.kappa < 2.0)) fail(ErrorCode::kInvalidScenario, "observer: kappa must lie in (0,2)");
  control::make_param_matrix(cfg.F, Matrix::Zero(cfg.n, cfg.m), cfg.q);  // shadow structure
  model.f = control::filter_offset(cfg.F, cfg.q);
  model.pdim = cfg.q * cfg.n + cfg.m * cfg.n;
  model.theta_dim = model.pdim + cfg.n;
  if (psi0_vertices.empty()) fail(ErrorCode::kInvalidScenario, "observer: no prior parameter vertices");
  Matrix pts(model.pdim, static_cast<int>(psi0_vertices.size()));
  for (size_t j = 0; j < psi0_vertices.size(); ++j)
    pts.col(static_cast<int>(j)) = control::z1_forward(psi0_vertices[j], model.f);
  model.chart_p = chart_or_identity(pts);
  model.chart_x = chart_or_identity(geometry::to_vrep(X00).V());
  return model;
}

ObserverState initial_state(const ObserverModel& model, const std::vector<control::ParamMatrix>& psi0_vertices,
                            const Polytope& X00, const Vector& p_hat0, const Vector& x0_hat0, const Vector& y0) {
  const auto& c = model.cfg;
  const int L = model.theta_dim;
  ObserverState s;
  s.t = 0;
  s.M = Matrix::Zero(c.n, model.pdim);
  s.Fpow = Matrix::Identity(c.n, c.n);
  s.omega_stack.assign(L, Matrix::Zero(c.q, L));
  s.y_stack.assign(L, Vector::Zero(c.q));
  s.N_sets.assign(L, Polytope::point(Vector::Zero(c.q)));
  s.omega_stack[0].rightCols(c.n) = model.C();
  s.y_stack[0] = y0;
  s.noise_accum = Polytope::point(Vector::Zero(c.n));
  s.y_last = y0;

  Matrix pts(model.pdim, static_cast<int>(psi0_vertices.size()));
  for (size_t j = 0; j < psi0_vertices.size(); ++j)
    pts.col(static_cast<int>(j)) = control::z1_forward(psi0_vertices[j], model.f);
  s.Pi_local = Polytope::from_vertices(model.chart_p.basis.transpose() * (pts.colwise() - model.chart_p.origin));
  s.X0_local = model.chart_x.restrict(X00);
  s.Pi = model.chart_p.lift(s.Pi_local);
  s.X0set = model.chart_x.lift(s.X0_local);
  s.Psi_vertices = psi_vertices_of(model, s.Pi);

  s.theta_hat.resize(model.theta_dim);
  s.theta_hat << p_hat0, x0_hat0;
  return s;
}

ObserverState filter_step(const ObserverModel& model, const ObserverState& s, const Matrix& Y_t, const Matrix& U_t) {
  const auto& c = model.cfg;
  if (Y_t.rows() != c.n || Y_t.cols() != c.q * c.n || U_t.rows() != c.n || U_t.cols() != c.m * c.n)
    fail(ErrorCode::kDimMismatch, "filter_step: regressor block shapes");
  ObserverState out = s;
  Matrix YU(c.n, model.pdim);
  YU << Y_t, U_t;
  out.M = c.F * s.M + YU;
  out.Fpow = c.F * s.Fpow;
  return out;
}

ObserverState augment_regression(const ObserverModel& model, const ObserverState& s, const Matrix& omega,
                                 const Vector& y) {
  const auto& c = model.cfg;
  const int L = model.theta_dim;
  ObserverState out = s;
  for (int i = L - 1; i >= 1; --i) {
    out.omega_stack[i] = c.sigma * s.omega_stack[i] + (1.0 - c.sigma) * s.omega_stack[i - 1];
    out.y_stack[i] = c.sigma * s.y_stack[i] + (1.0 - c.sigma) * s.y_stack[i - 1];
    out.N_sets[i] = geometry::minkowski_sum(geometry::scale(s.N_sets[i], c.sigma),
                                            geometry::scale(s.N_sets[i - 1], 1.0 - c.sigma));
  }
  out.omega_stack[0] = omega;
  out.y_stack[0] = y;

  if (!s.noise_switched) {
    Polytope next = geometry::minkowski_sum(geometry::affine_image(c.F, s.noise_accum), c.D);
    if (c.rpi_noise_switch && geometry::hausdorff(next, s.noise_accum) <= geometry::kTolGeo) {
      next = geometry::mrpi_outer(c.F, c.D, 1e-3);
      out.noise_switched = true;
    }
    out.noise_accum = next;
  }
  out.N_sets[0] = geometry::affine_image(model.C(), out.noise_accum);
  out.t = s.t + 1;
  return out;
}

HalfspaceRows nonfalsified_halfspaces(const ObserverModel& model, const ObserverState& s) {
  const int L = model.theta_dim;
  HalfspaceRows rows;
  rows.A.resize(0, L);
  rows.b.resize(0);
  if (s.t == 0) return rows;
  std::vector<Vector> A;
  std::vector<double> b;
  for (int i = 0; i < L; ++i) {
    const Polytope N = geometry::complete(s.N_sets[i]);
    for (int r = 0; r < N.num_rows(); ++r) {
      const Vector a = N.A().row(r).transpose();
      const Vector row = -(a.transpose() * s.omega_stack[i]).transpose();
      const double rhs = N.b()(r) + model.cfg.noise_slack - a.dot(s.y_stack[i]);
      if (row.cwiseAbs().maxCoeff() <= 1e-14 && rhs >= 0.0) continue;
      A.push_back(row);
      b.push_back(rhs);
    }
  }
  rows.A.resize(static_cast<int>(A.size()), L);
  rows.b.resize(static_cast<int>(b.size()));
  for (size_t k = 0; k < A.size(); ++k) {
    rows.A.row(static_cast<int>(k)) = A[k].transpose();
    rows.b(static_cast<int>(k)) = b[k];
  }
  return rows;
}

ObserverState update_sets(const ObserverModel& model, const ObserverState& s) {
  const HalfspaceRows xi = nonfalsified_halfspaces(model, s);
  if (xi.A.rows() == 0) return s;
  const auto& chp = model.chart_p;
  const auto& chx = model.chart_x;
  const int kp = chp.chart_dim(), kx = chx.chart_dim();
  const int pdim = model.pdim;

  // Rows over chart coordinates ξ = [z; w] with θ = [c_p + E_p z; c_x + E_x w].
  const Polytope Pl = geometry::complete(s.Pi_local);
  const Polytope Xl = geometry::complete(s.X0_local);
  const int nr = Pl.num_rows() + Xl.num_rows() + static_cast<int>(xi.A.rows());
  Matrix A = Matrix::Zero(nr, kp + kx);
  Vector b(nr);
  int r = 0;
  for (int i = 0; i < Pl.num_rows(); ++i, ++r) {
    A.block(r, 0, 1, kp) = Pl.A().row(i);
    b(r) = Pl.b()(i);
  }
  for (int i = 0; i < Xl.num_rows(); ++i, ++r) {
    A.block(r, kp, 1, kx) = Xl.A().row(i);
    b(r) = Xl.b()(i);
  }
  for (int i = 0; i < xi.A.rows(); ++i, ++r) {
    const Vector rp = xi.A.row(i).head(pdim).transpose();
    const Vector rx = xi.A.row(i).tail(model.cfg.n).transpose();
    A.block(r, 0, 1, kp) = (chp.basis.transpose() * rp).transpose();
    A.block(r, kp, 1, kx) = (chx.basis.transpose() * rx).transpose();
    b(r) = xi.b(i) - rp.dot(chp.origin) - rx.dot(chx.origin);
  }
  const Polytope joint = Polytope::from_halfspaces(A, b);
  if (joint.is_empty()) fail(ErrorCode::kIdentificationInconsistency, "non-falsified set is empty");

  std::vector<int> zc(kp), wc(kx);
  for (int i = 0; i < kp; ++i) zc[i] = i;
  for (int i = 0; i < kx; ++i) wc[i] = kp + i;
  // Re-intersecting with the previous sets makes nesting hold by construction,
  // independent of rounding inside the elimination.
  const Polytope Pi_new = geometry::intersect(geometry::project(joint, zc), Pl);
  const Polytope X0_new = geometry::intersect(geometry::project(joint, wc), Xl);
  if (Pi_new.is_empty() || X0_new.is_empty())
    fail(ErrorCode::kIdentificationInconsistency, "non-falsified set is empty (true system outside the priors)");

  ObserverState out = s;
  out.pi_update_halted = Pi_new.num_vertices() > model.cfg.max_vertices_p;
  out.x0_update_halted = X0_new.num_vertices() > model.cfg.max_vertices_x;
  if (!out.pi_update_halted) {
    out.Pi_local = Pi_new;
    out.Pi = chp.lift(Pi_new);
    out.Psi_vertices = psi_vertices_of(model, out.Pi);
  }
  if (!out.x0_update_halted) {
    out.X0_local = X0_new;
    out.X0set = chx.lift(X0_new);
  }
  return out;
}

RegressionSnapshot snapshot(const ObserverState& s) {
  RegressionSnapshot snap;
  const int L = static_cast<int>(s.omega_stack.size());
  const int q = static_cast<int>(s.omega_stack[0].rows());
  snap.W.resize(L * q, L);
  snap.Y.resize(L * q);
  for (int i = 0; i < L; ++i) {
    snap.W.middleRows(i * q, q) = s.omega_stack[i];
    snap.Y.segment(i * q, q) = s.y_stack[i];
  }
  snap.normalizer = 1.0 + snap.W.squaredNorm();
  return snap;
}

ObserverState gradient_update(const ObserverModel& model, const ObserverState& s, const RegressionSnapshot& snap) {
  ObserverState out = s;
  const int pdim = model.pdim;
  const Vector theta_bar =
      s.theta_hat + model.cfg.kappa * snap.W.transpose() * (snap.Y - snap.W * s.theta_hat) / snap.normalizer;
  const Vector p_bar = theta_bar.head(pdim);
  const Vector x_bar = theta_bar.tail(model.cfg.n);

  auto project_block = [](const AffineChart& ch, const Polytope& local, const Vector& v) {
    Vector z = ch.to_local(v);
    if (!local.contains_point(z, 0.0)) z = geometry::project_point(local, z);
    return ch.to_global(z);
  };
  out.theta_hat.head(pdim) = project_block(model.chart_p, s.Pi_local, p_bar);
  out.theta_hat.tail(model.cfg.n) = project_block(model.chart_x, s.X0_local, x_bar);
  return out;
}

Vector state_estimate(const ObserverModel& model, const ObserverState& s) {
  return s.M * s.p_hat(model.pdim) + s.Fpow * s.x0_hat(model.pdim);
}

ObserverState observer_step(const ObserverModel& model, const ObserverState& s, const Vector& u_t,
                            const Vector& y_next, bool adapt) {
  const auto& c = model.cfg;
  const ObserverState s1 = filter_step(model, s, kron_identity_row(c.n, s.y_last), kron_identity_row(c.n, u_t));
  Matrix omega(c.q, model.theta_dim);
  omega << model.C() * s1.M, model.C() * s1.Fpow;
  ObserverState s2 = augment_regression(model, s1, omega, y_next);
  if (adapt) {
    s2 = update_sets(model, s2);
    s2 = gradient_update(model, s2, snapshot(s2));
  }
  s2.y_last = y_next;
  return s2;
}

ObserverState adjoin_estimate(const ObserverModel& model, const ObserverState& s, const Vector& p_hat,
                              const Vector& x0_hat) {
  ObserverState out = s;
  const Vector zp = model.chart_p.to_local(p_hat);
  const Vector zx = model.chart_x.to_local(x0_hat);
  if (!s.Pi_local.contains_point(zp, 0.0)) {
    out.Pi_local = geometry::convex_hull(s.Pi_local, Polytope::point(zp));
    out.Pi = model.chart_p.lift(out.Pi_local);
    out.Psi_vertices = psi_vertices_of(model, out.Pi);
  }
  if (!s.X0_local.contains_point(zx, 0.0)) {
    out.X0_local = geometry::convex_hull(s.X0_local, Polytope::point(zx));
    out.X0set = model.chart_x.lift(out.X0_local);
  }
  out.theta_hat << p_hat, x0_hat;
  return out;
}

control::ParamMatrix estimated_param(const ObserverModel& model, const ObserverState& s) {
  const auto& c = model.cfg;
  return control::z1_inverse(s.p_hat(model.pdim), model.f, c.n, c.m, c.q);
}

}  // namespace atmpc::observer
