#include "atmpc/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "atmpc/errors.hpp"
#include "atmpc/geometry.hpp"
#include "atmpc/scenario.hpp"
#include "atmpc/simulator.hpp"

namespace atmpc::selftest {
namespace {

using geometry::Polytope;

constexpr int kMaxMessages = 5;

struct Tally {
  SuiteResult res;

  void check(bool ok, const std::string& what) {
    ++res.checks;
    if (ok) return;
    ++res.failures;
    if (static_cast<int>(res.messages.size()) < kMaxMessages) res.messages.push_back(what);
  }
};

Polytope random_polygon(std::mt19937_64& rng, double radius, int points) {
  std::uniform_real_distribution<double> unif(-radius, radius);
  Matrix V(2, points);
  for (int k = 0; k < points; ++k) V.col(k) << unif(rng), unif(rng);
  return Polytope::from_vertices(V);
}

// Brute-force membership in P ⊕ Q: support inequalities over 720 directions.
bool in_sum_oracle(const Polytope& P, const Polytope& Q, const Vector& z) {
  for (int k = 0; k < 720; ++k) {
    const double th = 2.0 * M_PI * k / 720.0;
    Vector a(2);
    a << std::cos(th), std::sin(th);
    if (a.dot(z) > P.support(a) + Q.support(a) + 1e-12) return false;
  }
  return true;
}

// Brute-force membership in P ⊖ Q: z + q ∈ P for every vertex q of Q.
bool in_diff_oracle(const Polytope& P, const Polytope& Q, const Vector& z) {
  for (int k = 0; k < Q.num_vertices(); ++k)
    if (!P.contains_point(z + Q.V().col(k), 1e-12)) return false;
  return true;
}

// Disagreements are tolerated only within one grid cell of the result boundary.
bool near_boundary(const Polytope& R, const Vector& z, double cell) {
  if (R.is_empty()) return false;
  return std::abs(geometry::max_violation(R, z)) <= cell;
}

SuiteResult geometry_suite(std::uint64_t seed) {
  Tally t;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(3, 8);
  for (int inst = 0; inst < 40; ++inst) {
    const Polytope P = random_polygon(rng, 1.0, count(rng));
    const Polytope Q = random_polygon(rng, 0.3, count(rng));
    const Polytope S = geometry::minkowski_sum(P, Q);
    const Polytope D = geometry::pontryagin_diff(P, Q);
    const Vector lo = S.V().rowwise().minCoeff(), hi = S.V().rowwise().maxCoeff();
    const Vector step = (hi - lo) / 40.0;
    const double cell = step.norm();
    int bad_sum = 0, bad_diff = 0;
    for (int i = 0; i <= 40; ++i) {
      for (int j = 0; j <= 40; ++j) {
        Vector z(2);
        z << lo(0) + i * step(0), lo(1) + j * step(1);
        if (S.contains_point(z) != in_sum_oracle(P, Q, z) && !near_boundary(S, z, cell)) ++bad_sum;
        const bool in_d = !D.is_empty() && D.contains_point(z);
        if (in_d != in_diff_oracle(P, Q, z) && !near_boundary(D, z, cell)) ++bad_diff;
      }
    }
    t.check(bad_sum == 0, "instance " + std::to_string(inst) + ": Minkowski sum disagrees with the grid oracle");
    t.check(bad_diff == 0, "instance " + std::to_string(inst) + ": Pontryagin difference disagrees with the grid oracle");
    if (!D.is_empty())
      t.check(geometry::contains(P, geometry::minkowski_sum(D, Q)),
              "instance " + std::to_string(inst) + ": (P ⊖ Q) ⊕ Q ⊄ P");
  }
  for (double lam : {0.3, 0.5, 0.9}) {
    const Matrix F = lam * Matrix::Identity(2, 2);
    const Polytope W = Polytope::box(2, 1.0);
    const Polytope R = geometry::mrpi_outer(F, W, 1e-3);
    Vector e(2);
    e << 1.0, 0.0;
    const double exact = 1.0 / (1.0 - lam);
    const double got = R.support(e);
    t.check(got >= exact * (1.0 - 1e-9) && got <= exact * (1.0 + 1e-3),
            "mRPI support for λ = " + std::to_string(lam) + " off the analytic value");
    t.check(geometry::is_robust_invariant(F, R, W), "mRPI outer bound is not robust invariant");
  }
  return t.res;
}

SuiteResult observer_suite(std::uint64_t seed) {
  Tally t;
  for (std::uint64_t s = seed; s < seed + 3; ++s) {
    sim::Scenario scn = sim::randomized(scenario::reference_example(), s);
    scn.kind = sim::RunKind::kIdentification;
    scn.steps = 15;
    const sim::RunLog log = sim::run_identification(scn);
    for (const auto& r : log.records) {
      t.check(r.truth_in_sets, "seed " + std::to_string(s) + " t=" + std::to_string(r.t) + ": truth left the sets");
      t.check(r.sets_nested, "seed " + std::to_string(s) + " t=" + std::to_string(r.t) + ": sets grew");
    }
    t.check(log.records.back().vol_pi <= log.records.front().vol_pi, "parameter set volume increased");
  }
  return t.res;
}

SuiteResult monitor_suite(std::uint64_t seed) {
  Tally t;
  // Scalar closed form: γ₁ = max_x N q x² + p x² + max_u N r u², γ₃ = H_max e_max + (H_max − H_min) γ₁.
  sim::RunLog log;
  sim::MonitorConstants k;
  k.N = 3;
  k.Q = Matrix::Constant(1, 1, 2.0);
  k.R = Matrix::Constant(1, 1, 0.5);
  k.Xfeas_vertices = (Matrix(1, 2) << -1.0, 2.0).finished();
  k.U_vertices = (Matrix(1, 2) << -1.0, 1.0).finished();
  k.H_max = 4;
  for (int i = 0; i < 2; ++i) {
    sim::StepRecord r;
    r.t = i;
    r.P = Matrix::Constant(1, 1, 3.0);
    r.E_bar_vertices = (Matrix(1, 2) << -0.1, 0.2).finished();
    r.H = i == 0 ? 2 : 3;
    r.cost = i == 0 ? 10.0 : 10.0 + 200.0;
    log.records.push_back(r);
  }
  const double g1 = 3 * 2.0 * 4.0 + 3.0 * 4.0 + 3 * 0.5 * 1.0;
  const double g3 = 4 * (3.0 * 0.04) + (4 - 2) * g1;
  const sim::MonitorReport rep = sim::lyapunov_monitor(log, k);
  t.check(std::abs(rep.gamma1 - g1) <= 1e-12 * g1, "γ₁ differs from the scalar closed form");
  t.check(rep.gamma3.size() == 1 && std::abs(rep.gamma3[0] - g3) <= 1e-12 * g3, "γ₃ differs from the scalar closed form");
  t.check(rep.violations.size() == 1, "a cost jump above γ₃ went unreported");

  sim::Scenario scn = sim::randomized(scenario::reference_example(), seed);
  scn.steps = 12;
  const sim::RunLog run = sim::run_closed_loop(scn);
  const sim::MonitorReport mr = sim::lyapunov_monitor(run, run.monitor);
  t.check(mr.violations.empty(), "closed-loop cost rose above the decrease bound");
  return t.res;
}

SuiteResult luenberger_suite(std::uint64_t seed) {
  Tally t;
  sim::Scenario scn = sim::randomized(scenario::reference_example(), seed);
  scn.mode = sim::Mode::kFrozen;
  scn.steps = 12;
  const sim::RunLog log = sim::run_closed_loop(scn);
  const std::vector<Vector> z = sim::luenberger_replay(scn, log);
  double worst = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, (z[i] - log.records[i].x_hat).cwiseAbs().maxCoeff());
  t.check(worst <= 1e-10, "frozen observer and Luenberger recursion differ by " + std::to_string(worst));
  return t.res;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"geometry", "observer", "monitor", "luenberger"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    fail(ErrorCode::kInvalidScenario, "unknown selftest suite '" + name + "'");
  SuiteResult res;
  try {
    if (name == "geometry") res = geometry_suite(seed);
    else if (name == "observer") res = observer_suite(seed);
    else if (name == "monitor") res = monitor_suite(seed);
    else res = luenberger_suite(seed);
  } catch (const Error& e) {
    res.failures += 1;
    res.checks += 1;
    res.messages.push_back(std::string("raised ") + e.what());
  }
  res.name = name;
  res.passed = res.failures == 0 && res.checks > 0;
  return res;
}

}  // namespace atmpc::selftest
