#include <doctest.h>

#include <set>

#include "atmpc/errors.hpp"
#include "atmpc/scenario.hpp"
#include "atmpc/simulator.hpp"

using namespace atmpc;

TEST_CASE("plant step is linear and exact") {
  const auto scn = scenario::reference_example();
  const auto [x0, y0] = sim::step_plant(scn.plant, Vector::Zero(2), Vector::Zero(1), Vector::Zero(2));
  CHECK(x0.norm() == 0.0);
  Vector u(1), d(2);
  u << 0.5;
  d << 0.1, -0.1;
  const auto [x1, y1] = sim::step_plant(scn.plant, scn.plant.x0, u, d);
  // −1.2·12 + 39 + 4·0.5 + 0.1 and 0.2·12 − 3.233·0.5 − 0.1.
  CHECK(x1(0) == doctest::Approx(26.7));
  CHECK(x1(1) == doctest::Approx(0.6835));
  CHECK(y1(0) == doctest::Approx(26.7));
}

TEST_CASE("disturbances are seeded, bounded, and cycle in adversarial mode") {
  const geometry::Polytope D = geometry::Polytope::box(2, 0.1);
  sim::DisturbanceSource a(D, sim::DisturbanceMode::kUniform, 9), b(D, sim::DisturbanceMode::kUniform, 9);
  for (int i = 0; i < 50; ++i) {
    const Vector da = a.next(), db = b.next();
    CHECK((da - db).norm() == 0.0);
    CHECK(D.contains_point(da, 0.0));
  }
  sim::DisturbanceSource adv(D, sim::DisturbanceMode::kAdversarial, 1);
  std::set<std::pair<double, double>> seen;
  for (int i = 0; i < 4; ++i) {
    const Vector v = adv.next();
    seen.insert({v(0), v(1)});
    CHECK(std::abs(std::abs(v(0)) - 0.1) <= 1e-15);
  }
  CHECK(seen.size() == 4u);
  const Vector again = adv.next();
  CHECK(seen.count({again(0), again(1)}) == 1u);
  sim::DisturbanceSource zero(geometry::Polytope::point(Vector::Zero(2)), sim::DisturbanceMode::kUniform, 3);
  CHECK(zero.next().norm() == 0.0);
}

TEST_CASE("validation names the violated premise") {
  auto scn = scenario::reference_example();
  scn.plant.B(1, 0) = -5.0;
  try {
    sim::validate(scn);
    FAIL("expected InvalidScenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidScenario);
    CHECK(std::string(e.what()).find("prior parameter set") != std::string::npos);
  }
  auto bad_f = scenario::reference_example();
  bad_f.F(0, 0) = 1.5;
  CHECK_THROWS_AS(sim::validate(bad_f), Error);
}

TEST_CASE("zero input set with an unstable plant is initially infeasible") {
  sim::Scenario s;
  s.name = "scalar_unstable";
  s.plant.A = Matrix::Constant(1, 1, 1.5);
  s.plant.B = Matrix::Constant(1, 1, 1.0);
  s.plant.q = 1;
  s.plant.X = geometry::Polytope::box(1, 10.0);
  s.plant.U = geometry::Polytope::point(Vector::Zero(1));
  s.plant.D = geometry::Polytope::box(1, 0.1);
  s.plant.x0 = Vector::Constant(1, 5.0);
  s.psi0 = {control::make_param_matrix(s.plant.A, s.plant.B, 1)};
  s.psi_hat0 = s.psi0[0];
  s.X00 = geometry::Polytope::box(Vector::Constant(1, 4.5), Vector::Constant(1, 5.5));
  s.x0_hat0 = Vector::Constant(1, 5.0);
  s.F = Matrix::Constant(1, 1, 0.2);
  s.Q = Matrix::Identity(1, 1);
  s.R = Matrix::Identity(1, 1);
  s.max_shape_vertices = 4;
  s.steps = 3;
  try {
    sim::run_closed_loop(s);
    FAIL("expected InitiallyInfeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInitiallyInfeasible);
  }
}

TEST_CASE("randomized scenarios keep the truth inside the priors") {
  const auto base = scenario::reference_example();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = sim::randomized(base, seed);
    CHECK_NOTHROW(sim::validate(s));
    CHECK(s.seed == seed);
    CHECK(base.X00.contains_point(s.plant.x0));
  }
}

TEST_CASE("frozen closed loop keeps the estimate and matches the Luenberger recursion") {
  auto scn = scenario::reference_example();
  scn.mode = sim::Mode::kFrozen;
  scn.steps = 8;
  const auto log = sim::run_closed_loop(scn);
  REQUIRE(log.records.size() == 8u);
  const auto z = sim::luenberger_replay(scn, log);
  for (std::size_t t = 0; t < z.size(); ++t) {
    CHECK((z[t] - log.records[t].x_hat).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(log.records[t].vol_pi == doctest::Approx(log.records[0].vol_pi).epsilon(1e-12));
  }
}

TEST_CASE("Luenberger gain requires matching shadow columns") {
  Matrix A(2, 2), F(2, 2);
  A << -1.2, 1.0, 0.2, 0.0;
  F << 0.03, 1.0, 0.01, 0.0;
  const Matrix L = sim::luenberger_gain(A, F, 1);
  CHECK(L(0, 0) == doctest::Approx(-1.23));
  CHECK(L(1, 0) == doctest::Approx(0.19));
  F(0, 1) = 0.5;
  CHECK_THROWS_AS(sim::luenberger_gain(A, F, 1), Error);
}

TEST_CASE("RMS windows use the final state for the last index") {
  sim::RunLog log;
  for (int t = 0; t < 3; ++t) {
    sim::StepRecord r;
    r.t = t;
    r.x = Vector::Constant(1, 1.0 + t);
    log.records.push_back(r);
  }
  log.summary.final_x = Vector::Constant(1, 4.0);
  CHECK(sim::rms(log, 0, 3) == doctest::Approx(std::sqrt((1 + 4 + 9 + 16) / 4.0)));
  CHECK(sim::rms(log, 3, 3) == doctest::Approx(4.0));
}

TEST_CASE("short adaptive run keeps every safety property") {
  auto scn = scenario::reference_example();
  scn.steps = 10;
  const auto log = sim::run_closed_loop(scn);
  REQUIRE(log.records.size() == 10u);
  for (const auto& r : log.records) {
    CHECK(r.hard_ok);
    CHECK(r.outer_tube_ok);
    CHECK(r.truth_in_sets);
    CHECK(r.sets_nested);
    if (r.backup) CHECK(!r.backup_reason.empty());
  }
  CHECK(sim::lyapunov_monitor(log, log.monitor).violations.empty());
}
