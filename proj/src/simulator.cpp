#include "atmpc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atmpc/errors.hpp"

namespace atmpc::sim {

using namespace geometry;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kAdaptive: return "adaptive";
    case Mode::kFrozen: return "frozen";
    case Mode::kLuenberger: return "luenberger";
  }
  return "adaptive";
}

Mode mode_from_string(const std::string& s) {
  if (s == "adaptive") return Mode::kAdaptive;
  if (s == "frozen") return Mode::kFrozen;
  if (s == "luenberger" || s == "luenberger-reference") return Mode::kLuenberger;
  fail(ErrorCode::kInvalidScenario, "unknown mode '" + s + "'");
}

const char* to_string(BackupInput b) { return b == BackupInput::kFreshSolve ? "fresh_solve" : "shift_previous"; }

BackupInput backup_input_from_string(const std::string& s) {
  if (s == "fresh_solve") return BackupInput::kFreshSolve;
  if (s == "shift_previous") return BackupInput::kShiftPrevious;
  fail(ErrorCode::kInvalidScenario, "unknown backup input policy '" + s + "'");
}

const char* to_string(DisturbanceMode d) { return d == DisturbanceMode::kUniform ? "uniform" : "adversarial"; }

DisturbanceMode disturbance_from_string(const std::string& s) {
  if (s == "uniform") return DisturbanceMode::kUniform;
  if (s == "adversarial") return DisturbanceMode::kAdversarial;
  fail(ErrorCode::kInvalidScenario, "unknown disturbance mode '" + s + "'");
}

const char* to_string(RunKind k) { return k == RunKind::kClosedLoop ? "closed_loop" : "identification"; }

RunKind run_kind_from_string(const std::string& s) {
  if (s == "closed_loop") return RunKind::kClosedLoop;
  if (s == "identification") return RunKind::kIdentification;
  fail(ErrorCode::kInvalidScenario, "unknown run kind '" + s + "'");
}

Matrix PlantModel::C() const {
  Matrix C = Matrix::Zero(q, n());
  C.leftCols(q) = Matrix::Identity(q, q);
  return C;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { fail(ErrorCode::kInvalidScenario, msg); }

Matrix prior_points(const Scenario& scn, const Vector& f) {
  Matrix pts(f.size() + scn.plant.m() * scn.plant.n(), static_cast<int>(scn.psi0.size()));
  for (size_t j = 0; j < scn.psi0.size(); ++j) pts.col(static_cast<int>(j)) = control::z1_forward(scn.psi0[j], f);
  return pts;
}

Vector true_p(const Scenario& scn) {
  const auto pm = control::make_param_matrix(scn.plant.A, scn.plant.B, scn.plant.q);
  return control::z1_forward(pm, control::filter_offset(scn.F, scn.plant.q));
}

observer::ObserverConfig observer_config(const Scenario& scn) {
  observer::ObserverConfig oc;
  oc.F = scn.F;
  oc.n = scn.plant.n();
  oc.m = scn.plant.m();
  oc.q = scn.plant.q;
  oc.D = scn.plant.D;
  oc.sigma = scn.sigma;
  oc.kappa = scn.kappa;
  oc.max_vertices_p = scn.max_vertices_p;
  oc.max_vertices_x = scn.max_vertices_x;
  return oc;
}

tube::TubeModel tube_model(const Scenario& scn) {
  tube::TubeModel tm;
  tm.F = scn.F;
  tm.C = scn.plant.C();
  tm.n = scn.plant.n();
  tm.m = scn.plant.m();
  tm.q = scn.plant.q;
  tm.X = complete(scn.plant.X);
  tm.U = complete(scn.plant.U);
  tm.D = complete(scn.plant.D);
  return tm;
}

tube::TubeConfig tube_config(const Scenario& scn) {
  tube::TubeConfig tc;
  tc.N = scn.N;
  tc.Q = scn.Q;
  tc.R = scn.R;
  tc.max_shape_vertices = scn.max_shape_vertices;
  return tc;
}

// Estimates and ingredients the backup branch reverts to.
struct Committed {
  Vector p_hat;
  Vector x0_hat;
  Matrix A_hat;
  Matrix B_hat;
  control::TerminalIngredients term;
  Polytope G;
  tube::TubeSolution sol;
};

struct Attempt {
  tube::TighteningData td;
  control::TerminalIngredients term;
  Polytope G;
  tube::TubeQp qp;
  std::optional<tube::TubeSolution> sol;
  std::string failure;
  bool crit_a = false;
  bool crit_b = false;
  bool crit_c = false;
};

struct Loop {
  const Scenario& scn;
  observer::ObserverModel model;
  tube::TubeModel tm;
  tube::TubeConfig tc;
  Vector p_true;
  Vector theta_true;
};

Attempt fresh_attempt(const Loop& L, const observer::ObserverState& obs, const Vector& x_hat, int t,
                      const control::TerminalIngredients* prev, tube::RpiCache& cache) {
  Attempt a;
  const int pdim = L.model.pdim;
  try {
    const auto est = observer::estimated_param(L.model, obs);
    const Matrix A = est.A(), B = est.B();
    a.td = tube::build_tightening(L.tm, L.tc, A, B, obs.p_hat(pdim), obs.Pi, obs.X0set, obs.x0_hat(pdim), t, cache);
    a.term = control::synthesize_terminal(A, B, L.tc.Q, L.tc.R, a.td.E_bar, a.td.Xcal, L.tm.U, prev,
                                          L.tc.terminal_iter_cap);
    a.crit_a = a.term.certified_a;
    a.crit_b = a.term.certified_b;
    a.crit_c = a.term.certified_c;
    if (!a.term.certified()) {
      a.failure = "criterion";
      return a;
    }
    a.G = complete(tube::build_shape_set(A + B * a.term.K, a.td.E_hat, L.tc).G);
    a.qp = tube::assemble_qp(L.tm, L.tc, a.td, a.G, a.term, x_hat);
    qp::QpStatus st = qp::QpStatus::kNumericalFailure;
    a.sol = tube::solve_tube(a.qp, a.G, L.tc.Q, L.tc.R, a.term.P, &st);
    if (!a.sol) a.failure = st == qp::QpStatus::kInfeasible ? "infeasible" : "numerical";
  } catch (const Error& e) {
    a.sol.reset();
    a.failure = to_string(e.code());
  }
  return a;
}

Attempt backup_attempt(const Loop& L, const observer::ObserverState& obs, const Vector& x_hat, int t,
                       const Committed& c, tube::RpiCache& cache, double& candidate_violation) {
  Attempt a;
  a.td = tube::build_tightening(L.tm, L.tc, c.A_hat, c.B_hat, c.p_hat, obs.Pi, obs.X0set, c.x0_hat, t, cache);
  a.term = control::terminal_for_gain(c.term.P, c.term.K, c.A_hat, c.B_hat, a.td.E_bar, a.td.Xcal, L.tm.U,
                                      L.tc.terminal_iter_cap);
  a.crit_a = a.crit_b = true;
  a.crit_c = a.term.certified_c;
  a.G = c.G;
  a.qp = tube::assemble_qp(L.tm, L.tc, a.td, a.G, a.term, x_hat);
  tube::TubeSolution cand = tube::shifted_candidate(c.sol, a.G, c.A_hat, c.B_hat, c.term.K, a.td.E_bar);
  candidate_violation = tube::max_row_violation(a.qp.problem, tube::pack(a.qp.layout, cand));
  if (L.scn.backup_input == BackupInput::kShiftPrevious) {
    cand.cost = tube::tube_cost(cand, a.G, L.tc.Q, L.tc.R, a.term.P);
    cand.max_violation = candidate_violation;
    a.sol = cand;
    return a;
  }
  a.sol = tube::solve_tube(a.qp, a.G, L.tc.Q, L.tc.R, a.term.P);
  if (!a.sol) fail(ErrorCode::kBackupInfeasible, "backup problem infeasible at t = " + std::to_string(t));
  return a;
}

double quad(const Vector& v, const Matrix& W) { return v.dot(W * v); }

void finish_summary(RunLog& log, const Scenario& scn, const Vector& x_final) {
  RunSummary& s = log.summary;
  s.scenario = scn.name;
  s.mode = to_string(scn.mode);
  s.seed = scn.seed;
  s.steps = static_cast<int>(log.records.size());
  s.final_x = x_final;
  s.backups = 0;
  s.cumulative_cost = 0.0;
  for (const auto& r : log.records) {
    if (r.backup) ++s.backups;
    if (r.u.size() > 0) s.cumulative_cost += quad(r.x, scn.Q) + quad(r.u, scn.R);
  }
  s.rms_x = rms(log, 0, s.steps);
  s.completed = true;
  s.termination = "completed";
}

// Core loop shared by the adaptive, frozen and Luenberger-reference modes.
RunLog closed_loop(const Scenario& scn, bool luenberger) {
  validate(scn);
  const auto chk = observer::ensure_invariant_initial_set(scn.F, scn.X00, scn.x0_hat0);
  Loop L{scn, observer::make_model(observer_config(scn), scn.psi0, chk.X0), tube_model(scn), tube_config(scn),
         true_p(scn), Vector()};
  L.theta_true.resize(L.p_true.size() + scn.plant.n());
  L.theta_true << L.p_true, scn.plant.x0;
  const int pdim = L.model.pdim;
  const Matrix C = scn.plant.C();
  const Vector p_hat0 = control::z1_forward(scn.psi_hat0, L.model.f);
  const bool adapt = scn.mode == Mode::kAdaptive && !luenberger;

  Vector x = scn.plant.x0;
  Vector y = C * x;
  observer::ObserverState obs = observer::initial_state(L.model, scn.psi0, chk.X0, p_hat0, scn.x0_hat0, y);
  DisturbanceSource dist(scn.plant.D, scn.disturbance, scn.seed);

  // Luenberger reference: independent recursion on the frozen estimate.
  const Matrix A_ref = scn.psi_hat0.A(), B_ref = scn.psi_hat0.B();
  const Matrix L_obs = luenberger ? luenberger_gain(A_ref, scn.F, scn.plant.q) : Matrix();
  Vector z = scn.x0_hat0;

  RunLog log;
  log.monitor.N = scn.N;
  log.monitor.Q = scn.Q;
  log.monitor.R = scn.R;
  log.monitor.U_vertices = to_vrep(L.tm.U).V();
  log.monitor.H_max = scn.max_shape_vertices;

  tube::RpiCache cache;
  std::optional<Committed> committed;
  Polytope prev_Pi = obs.Pi, prev_X0 = obs.X0set;

  for (int t = 0; t < scn.steps; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.x = x;
    Vector x_hat = luenberger ? z : observer::state_estimate(L.model, obs);

    const tube::RpiCache cache_before = cache;
    Attempt att = fresh_attempt(L, obs, x_hat, t, committed ? &committed->term : nullptr, cache);
    rec.crit_a = att.crit_a;
    rec.crit_b = att.crit_b;
    rec.crit_c = att.crit_c;
    if (!att.sol) {
      if (!committed) fail(ErrorCode::kInitiallyInfeasible, "Initially infeasible setup (" + att.failure + ")");
      cache = cache_before;
      rec.backup = true;
      rec.backup_reason = att.failure;
      obs = observer::adjoin_estimate(L.model, obs, committed->p_hat, committed->x0_hat);
      if (!luenberger) x_hat = observer::state_estimate(L.model, obs);
      att = backup_attempt(L, obs, x_hat, t, *committed, cache, rec.candidate_violation);
    }
    const tube::TubeSolution& sol = *att.sol;
    const tube::ExtractedInput ex = tube::extract_input(sol, att.G, x_hat);
    const Vector u = ex.u;

    Committed next;
    next.p_hat = obs.p_hat(pdim);
    next.x0_hat = obs.x0_hat(pdim);
    next.A_hat = att.td.A_hat;
    next.B_hat = att.td.B_hat;
    next.term = att.term;
    next.G = att.G;
    next.sol = sol;
    committed = std::move(next);

    if (t == 0) {
      const Polytope feas = pontryagin_diff(L.tm.X, att.td.Xbar);
      log.monitor.Xfeas_vertices = feas.is_empty() ? to_vrep(L.tm.X).V() : to_vrep(feas).V();
    }

    rec.x_hat = x_hat;
    rec.u = u;
    rec.cost = sol.cost;
    rec.alpha = sol.alpha;
    rec.beta = sol.beta;
    rec.H = static_cast<int>(att.G.num_vertices());
    rec.P = att.term.P;
    rec.E_bar_vertices = to_vrep(att.td.E_bar).V();
    const Polytope tube0 = translate(scale(att.G, sol.beta(0)), sol.alpha[0]);
    rec.tube0_vertices = tube0.V();
    const Polytope outer = minkowski_sum(tube0, att.td.Xtilde[0]);
    rec.outer_tube_vertices = outer.V();
    rec.outer_tube_ok = outer.contains_point(x);
    rec.hard_ok = L.tm.X.contains_point(x, 0.0) && L.tm.U.contains_point(u, 0.0);
    rec.vol_pi = volume(obs.Pi);
    rec.vol_x0 = volume(obs.X0set);
    rec.diam_pi = diameter(obs.Pi);
    rec.err_p = (obs.p_hat(pdim) - L.p_true).norm();
    rec.err_x = (x_hat - x).norm();
    rec.err_theta = (obs.theta_hat - L.theta_true).cwiseAbs().maxCoeff();
    rec.truth_in_sets = obs.Pi.contains_point(L.p_true) && obs.X0set.contains_point(scn.plant.x0);
    rec.sets_nested = contains(prev_Pi, obs.Pi) && contains(prev_X0, obs.X0set);
    prev_Pi = obs.Pi;
    prev_X0 = obs.X0set;
    log.records.push_back(std::move(rec));

    const Vector y_t = y;
    const Vector d = dist.next();
    std::tie(x, y) = step_plant(scn.plant, x, u, d);
    obs = observer::observer_step(L.model, obs, u, y, adapt);
    if (luenberger) z = A_ref * z + B_ref * u + L_obs * (y_t - C * z);
  }
  finish_summary(log, scn, x);
  if (luenberger) log.summary.mode = to_string(Mode::kLuenberger);
  return log;
}

}  // namespace

void validate(const Scenario& scn) {
  const PlantModel& p = scn.plant;
  const int n = p.n(), m = p.m(), q = p.q;
  if (n < 1 || p.A.cols() != n || p.B.rows() != n || m < 1) invalid("plant matrices have inconsistent shapes");
  if (q < 1 || q > n) invalid("output dimension q must satisfy 1 ≤ q ≤ n");
  if (p.X.dim() != n || p.D.dim() != n || p.U.dim() != m) invalid("constraint set dimensions do not match the plant");
  if (p.x0.size() != n || scn.x0_hat0.size() != n || scn.X00.dim() != n) invalid("initial-state data has wrong dimension");
  if (scn.F.rows() != n || scn.F.cols() != n) invalid("filter matrix F must be n × n");
  if (scn.Q.rows() != n || scn.Q.cols() != n || scn.R.rows() != m || scn.R.cols() != m) invalid("weights have wrong shape");
  if (min_sym_eigenvalue(scn.Q) < -1e-12) invalid("Q must be positive semidefinite");
  if (min_sym_eigenvalue(scn.R) <= 0.0) invalid("R must be positive definite");
  if (scn.N < 1) invalid("horizon N must be at least 1");
  if (scn.steps < 1) invalid("steps must be at least 1");
  if (!(scn.sigma > 0.0 && scn.sigma < 1.0)) invalid("sigma must lie in (0, 1)");
  if (!(scn.kappa > 0.0 && scn.kappa < 2.0)) invalid("kappa must lie in (0, 2)");
  if (scn.max_vertices_p < 2 || scn.max_vertices_x < 2 || scn.max_shape_vertices < n + 1)
    invalid("vertex caps are too small");
  if (scn.psi0.empty()) invalid("the prior parameter set needs at least one vertex");
  try {
    control::make_param_matrix(p.A, p.B, q);
    control::make_param_matrix(scn.F, Matrix::Zero(n, m), q);
    for (const auto& v : scn.psi0) control::make_param_matrix(v.A(), v.B(), q);
    control::make_param_matrix(scn.psi_hat0.A(), scn.psi_hat0.B(), q);
  } catch (const Error& e) {
    invalid(std::string("canonical structure: ") + e.what());
  }
  if (!control::schur_stable(scn.F)) invalid("filter matrix F must be Schur stable");
  for (const auto& v : scn.psi0)
    if (v.n != n || v.m != m || v.q != q) invalid("prior vertex dimensions do not match the plant");

  const Vector f = control::filter_offset(scn.F, q);
  const Polytope prior = Polytope::from_vertices(prior_points(scn, f));
  if (!prior.contains_point(true_p(scn), 1e-9))
    invalid("true parameters lie outside the prior parameter set (identification premise)");
  if (!prior.contains_point(control::z1_forward(scn.psi_hat0, f), 1e-9))
    invalid("initial parameter estimate lies outside the prior parameter set");
  if (!scn.X00.contains_point(p.x0, 1e-9)) invalid("true initial state lies outside the prior initial-state set");
  if (!scn.X00.contains_point(scn.x0_hat0, 1e-9)) invalid("initial state estimate lies outside the prior initial-state set");
  if (!p.X.contains_point(p.x0, 0.0)) invalid("true initial state violates the state constraints");
  if (!p.D.contains_point(Vector::Zero(n))) invalid("disturbance set must contain the origin");
  if (!p.U.contains_point(Vector::Zero(m))) invalid("input set must contain the origin");
}

Scenario randomized(const Scenario& scn, std::uint64_t seed) {
  Scenario out = scn;
  out.seed = seed;
  std::mt19937_64 rng(seed ^ 0x5bd1e9955bd1e995ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> w(scn.psi0.size());
  double total = 0.0;
  for (double& wi : w) {
    wi = -std::log(1.0 - unif(rng));
    total += wi;
  }
  Matrix psi = Matrix::Zero(scn.psi0[0].psi.rows(), scn.psi0[0].psi.cols());
  for (size_t j = 0; j < w.size(); ++j) psi += (w[j] / total) * scn.psi0[j].psi;
  const int n = scn.plant.n();
  out.plant.A = psi.leftCols(n);
  out.plant.B = psi.rightCols(scn.plant.m());
  // Shadow entries are exact 0/1 in every vertex; remove convex-combination round-off.
  for (int j = scn.plant.q; j < n; ++j) out.plant.A.col(j) = scn.psi0[0].A().col(j);

  const Polytope X0v = to_vrep(scn.X00);
  const Vector lo = X0v.V().rowwise().minCoeff(), hi = X0v.V().rowwise().maxCoeff();
  Vector x0(n);
  do {
    for (int i = 0; i < n; ++i) x0(i) = lo(i) + (hi(i) - lo(i)) * unif(rng);
  } while (!scn.X00.contains_point(x0, 0.0));
  out.plant.x0 = x0;
  return out;
}

std::pair<Vector, Vector> step_plant(const PlantModel& plant, const Vector& x, const Vector& u, const Vector& d) {
  const Vector xn = plant.A * x + plant.B * u + d;
  return {xn, plant.C() * xn};
}

DisturbanceSource::DisturbanceSource(const Polytope& D, DisturbanceMode mode, std::uint64_t seed)
    : D_(to_vrep(D)), mode_(mode), rng_(seed) {
  lo_ = D_.V().rowwise().minCoeff();
  hi_ = D_.V().rowwise().maxCoeff();
}

Vector DisturbanceSource::next() {
  const int n = D_.dim();
  if (mode_ == DisturbanceMode::kAdversarial) {
    const Vector v = D_.V().col(cursor_);
    cursor_ = (cursor_ + 1) % D_.num_vertices();
    return v;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector d(n);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int i = 0; i < n; ++i) d(i) = lo_(i) + (hi_(i) - lo_(i)) * unif(rng_);
    if (D_.has_hrep() ? D_.contains_point(d, 0.0) : contains_point(D_, d, 0.0)) return d;
  }
  return D_.V().rowwise().mean();  // degenerate 𝔻: its centroid lies inside
}

Matrix luenberger_gain(const Matrix& A_hat, const Matrix& F, int q) {
  const int n = static_cast<int>(A_hat.rows());
  if (F.rows() != n || F.cols() != n) fail(ErrorCode::kDimMismatch, "luenberger_gain: F shape");
  if (n > q && (A_hat.rightCols(n - q) - F.rightCols(n - q)).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorCode::kNoValidGain, "no output injection maps the estimate onto F");
  return A_hat.leftCols(q) - F.leftCols(q);
}

RunLog run_closed_loop(const Scenario& scn) {
  if (scn.kind == RunKind::kIdentification) return run_identification(scn);
  return closed_loop(scn, scn.mode == Mode::kLuenberger);
}

RunLog run_luenberger_reference(const Scenario& scn) {
  Scenario s = scn;
  s.mode = Mode::kLuenberger;
  return closed_loop(s, true);
}

RunLog run_identification(const Scenario& scn) {
  validate(scn);
  const auto chk = observer::ensure_invariant_initial_set(scn.F, scn.X00, scn.x0_hat0);
  const observer::ObserverModel model = observer::make_model(observer_config(scn), scn.psi0, chk.X0);
  const int pdim = model.pdim;
  const Vector p_true = true_p(scn);
  Vector theta_true(pdim + scn.plant.n());
  theta_true << p_true, scn.plant.x0;

  Vector x = scn.plant.x0;
  Vector y = scn.plant.C() * x;
  const Vector p_hat0 = control::z1_forward(scn.psi_hat0, model.f);
  observer::ObserverState obs = observer::initial_state(model, scn.psi0, chk.X0, p_hat0, scn.x0_hat0, y);
  DisturbanceSource dist(scn.plant.D, scn.disturbance, scn.seed);
  std::mt19937_64 rng(scn.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Polytope Uv = to_vrep(scn.plant.U);
  const Vector ulo = Uv.V().rowwise().minCoeff(), uhi = Uv.V().rowwise().maxCoeff();

  RunLog log;
  Polytope prev_Pi = obs.Pi, prev_X0 = obs.X0set;
  for (int t = 0; t < scn.steps; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.x = x;
    rec.x_hat = observer::state_estimate(model, obs);
    Vector u(scn.plant.m());
    for (int i = 0; i < u.size(); ++i) {
      const double mid = 0.5 * (ulo(i) + uhi(i)), half = 0.5 * (uhi(i) - ulo(i)) * scn.excitation;
      u(i) = mid + half * (2.0 * unif(rng) - 1.0);
    }
    rec.u = u;
    rec.vol_pi = volume(obs.Pi);
    rec.vol_x0 = volume(obs.X0set);
    rec.diam_pi = diameter(obs.Pi);
    rec.err_p = (obs.p_hat(pdim) - p_true).norm();
    rec.err_x = (rec.x_hat - x).norm();
    rec.err_theta = (obs.theta_hat - theta_true).cwiseAbs().maxCoeff();
    rec.truth_in_sets = obs.Pi.contains_point(p_true) && obs.X0set.contains_point(scn.plant.x0);
    rec.sets_nested = contains(prev_Pi, obs.Pi) && contains(prev_X0, obs.X0set);
    rec.hard_ok = scn.plant.U.contains_point(u, 0.0);
    prev_Pi = obs.Pi;
    prev_X0 = obs.X0set;
    log.records.push_back(std::move(rec));

    std::tie(x, y) = step_plant(scn.plant, x, u, dist.next());
    obs = observer::observer_step(model, obs, u, y, true);
  }
  finish_summary(log, scn, x);
  return log;
}

std::vector<Vector> luenberger_replay(const Scenario& scn, const RunLog& log) {
  const Matrix A = scn.psi_hat0.A(), B = scn.psi_hat0.B();
  const Matrix L = luenberger_gain(A, scn.F, scn.plant.q);
  const Matrix C = scn.plant.C();
  std::vector<Vector> out;
  Vector z = scn.x0_hat0;
  for (const auto& r : log.records) {
    out.push_back(z);
    z = A * z + B * r.u + L * (C * r.x - C * z);
  }
  return out;
}

MonitorReport lyapunov_monitor(const RunLog& log, const MonitorConstants& k) {
  MonitorReport rep;
  const auto& recs = log.records;
  if (recs.empty()) return rep;
  rep.H_min = recs.front().H;
  for (const auto& r : recs) rep.H_min = std::min(rep.H_min, r.H);

  auto gamma1_for = [&](const Matrix& P) {
    // Separable convex terms: the maximum sits at a vertex of each factor.
    double xmax = 0.0, umax = 0.0;
    for (int j = 0; j < k.Xfeas_vertices.cols(); ++j) {
      const Vector v = k.Xfeas_vertices.col(j);
      xmax = std::max(xmax, k.N * quad(v, k.Q) + quad(v, P));
    }
    for (int j = 0; j < k.U_vertices.cols(); ++j) umax = std::max(umax, k.N * quad(k.U_vertices.col(j), k.R));
    return xmax + umax;
  };
  auto emax = [](const Matrix& E, const Matrix& P) {
    double e = 0.0;
    for (int j = 0; j < E.cols(); ++j) e = std::max(e, quad(E.col(j), P));
    return e;
  };

  for (size_t t = 0; t + 1 < recs.size(); ++t) {
    const auto& a = recs[t];
    const auto& b = recs[t + 1];
    const double g1 = std::max(gamma1_for(a.P), gamma1_for(b.P));
    rep.gamma1 = std::max(rep.gamma1, g1);
    const double e = std::max({emax(a.E_bar_vertices, a.P), emax(a.E_bar_vertices, b.P),
                               emax(b.E_bar_vertices, a.P), emax(b.E_bar_vertices, b.P)});
    const double g3 = k.H_max * e + (k.H_max - rep.H_min) * g1;
    rep.gamma3.push_back(g3);
    if (b.cost > a.cost + g3 + 1e-6 * std::max(1.0, a.cost)) rep.violations.push_back(static_cast<int>(t));
  }
  return rep;
}

double rms(const RunLog& log, int from, int to) {
  double acc = 0.0;
  int cnt = 0;
  const int T = static_cast<int>(log.records.size());
  for (int t = std::max(0, from); t <= to && t <= T; ++t) {
    const Vector& x = t < T ? log.records[t].x : log.summary.final_x;
    if (x.size() == 0) continue;
    acc += x.squaredNorm();
    ++cnt;
  }
  return cnt ? std::sqrt(acc / cnt) : 0.0;
}

}  // namespace atmpc::sim
