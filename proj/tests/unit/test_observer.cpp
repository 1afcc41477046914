#include <doctest.h>

#include "atmpc/observer.hpp"
#include "atmpc/scenario.hpp"
#include "atmpc/simulator.hpp"
#include "reference_fixture.hpp"

using namespace atmpc;

TEST_CASE("benchmark initial-state box is already invariant under the filter") {
  const auto scn = scenario::reference_example();
  const auto chk = observer::ensure_invariant_initial_set(scn.F, scn.X00, scn.x0_hat0);
  CHECK(chk.was_invariant);
  CHECK(geometry::contains(chk.X0, scn.X00));
}

TEST_CASE("non-invariant initial set is repaired by an invariant hull") {
  Matrix F(2, 2);
  F << 0.5, 1.0, 0.1, 0.0;
  Vector lo(2), hi(2), c(2);
  lo << -1.0, -1.0;
  hi << 1.0, 1.0;
  c << 0.0, 0.0;
  const geometry::Polytope X0 = geometry::Polytope::box(lo, hi);
  const auto chk = observer::ensure_invariant_initial_set(F, X0, c);
  CHECK(!chk.was_invariant);
  CHECK(geometry::contains(chk.X0, X0));
  const geometry::Polytope shifted = geometry::translate(chk.X0, -c);
  CHECK(geometry::contains(shifted, geometry::affine_image(F, shifted), 1e-8));
}

TEST_CASE("initial sets hold the truth and the estimate") {
  const auto f = fixture::first_step();
  const Vector p_true = control::z1_forward(control::make_param_matrix(f.scn.plant.A, f.scn.plant.B, 1), f.model.f);
  CHECK(f.obs.Pi.contains_point(p_true));
  CHECK(f.obs.Pi.contains_point(f.obs.p_hat(f.model.pdim)));
  CHECK(f.obs.X0set.contains_point(f.scn.plant.x0));
}

TEST_CASE("property: identification keeps the truth and shrinks the sets") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    sim::Scenario scn = sim::randomized(scenario::reference_example(), seed);
    scn.kind = sim::RunKind::kIdentification;
    scn.steps = 20;
    const sim::RunLog log = sim::run_identification(scn);
    REQUIRE(log.records.size() == 20u);
    for (const auto& r : log.records) {
      CHECK(r.truth_in_sets);
      CHECK(r.sets_nested);
      CHECK(r.hard_ok);
    }
    CHECK(log.records.back().vol_pi < log.records.front().vol_pi);
  }
}

TEST_CASE("frozen observer leaves sets and estimates untouched") {
  auto f = fixture::first_step();
  Vector u = Vector::Constant(1, 0.5);
  Vector x = f.scn.plant.x0;
  observer::ObserverState s = f.obs;
  for (int t = 0; t < 5; ++t) {
    x = f.scn.plant.A * x + f.scn.plant.B * u;
    s = observer::observer_step(f.model, s, u, x.head(1), false);
  }
  CHECK((s.theta_hat - f.obs.theta_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(geometry::hausdorff(s.Pi, f.obs.Pi) <= 1e-12);
  CHECK(geometry::hausdorff(s.X0set, f.obs.X0set) <= 1e-12);
}

TEST_CASE("adjoining an estimate keeps it inside the sets") {
  auto f = fixture::first_step();
  Vector p = f.obs.p_hat(f.model.pdim);
  const Vector x0 = f.obs.x0_hat(f.model.pdim);
  const auto s = observer::adjoin_estimate(f.model, f.obs, p, x0);
  CHECK(s.Pi.contains_point(p));
  CHECK(s.X0set.contains_point(x0));
  CHECK((s.theta_hat.head(f.model.pdim) - p).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("non-falsified rows contain the truth after data arrives") {
  auto f = fixture::first_step();
  const Vector p_true = control::z1_forward(control::make_param_matrix(f.scn.plant.A, f.scn.plant.B, 1), f.model.f);
  Vector theta(p_true.size() + 2);
  theta << p_true, f.scn.plant.x0;
  Vector x = f.scn.plant.x0;
  observer::ObserverState s = f.obs;
  const Vector u = Vector::Constant(1, -1.0);
  for (int t = 0; t < 4; ++t) {
    x = f.scn.plant.A * x + f.scn.plant.B * u;
    s = observer::observer_step(f.model, s, u, x.head(1), true);
  }
  const auto rows = observer::nonfalsified_halfspaces(f.model, s);
  REQUIRE(rows.A.rows() > 0);
  CHECK((rows.A * theta - rows.b).maxCoeff() <= 1e-9);
}
