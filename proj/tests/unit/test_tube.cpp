#include <doctest.h>

#include "atmpc/errors.hpp"
#include "atmpc/tube_mpc.hpp"
#include "reference_fixture.hpp"

using namespace atmpc;

namespace {

struct Solved {
  fixture::FirstStep f;
  tube::TubeQp tq;
  std::optional<tube::TubeSolution> sol;
  qp::QpStatus status = qp::QpStatus::kNumericalFailure;
};

Solved solve_first(int vertex) {
  Solved s{fixture::first_step(vertex), {}, std::nullopt};
  s.tq = tube::assemble_qp(s.f.tm, s.f.tc, s.f.td, s.f.shape.G, s.f.term, s.f.x_hat);
  s.sol = tube::solve_tube(s.tq, s.f.shape.G, s.f.tc.Q, s.f.tc.R, s.f.term.P, &s.status);
  return s;
}

}  // namespace

TEST_CASE("regressor error set contains the origin") {
  const auto f = fixture::first_step();
  CHECK(f.td.Dyu.contains_point(Vector::Zero(2)));
  CHECK(geometry::inf_radius(f.td.Dyu) > 0.0);
}

TEST_CASE("error chain follows the filter and tightened sets absorb it") {
  const auto f = fixture::first_step();
  REQUIRE(f.td.Xtilde.size() == static_cast<std::size_t>(f.tc.N + 1));
  for (int i = 0; i < f.tc.N; ++i) {
    CHECK(geometry::contains(f.td.Xtilde[i + 1], geometry::affine_image(f.tm.F, f.td.Xtilde[i]), 1e-8));
  }
  for (int i = 0; i <= f.tc.N; ++i)
    CHECK(geometry::contains(f.tm.X, geometry::minkowski_sum(f.td.Xhat[i], f.td.Xtilde[i]), 1e-8));
  CHECK(geometry::contains(f.tm.X, f.td.Xcal));
}

TEST_CASE("shape set absorbs the model error and respects the vertex cap") {
  const auto f = fixture::first_step();
  const Matrix Acl = f.td.A_hat + f.td.B_hat * f.term.K;
  CHECK(f.shape.G.num_vertices() <= f.tc.max_shape_vertices);
  CHECK(geometry::is_robust_invariant(Acl, f.shape.G, f.td.E_hat, 1e-9));
  CHECK(f.shape.G.contains_point(Vector::Zero(2)));
}

TEST_CASE("first-step tube cost matches an independent conic solver") {
  // Oracle: the assembled QP re-solved with Clarabel through cvxpy.
  const auto s0 = solve_first(0);
  REQUIRE(s0.sol);
  CHECK(s0.sol->qp_objective == doctest::Approx(67278.89249826504).epsilon(1e-6));
  const auto s1 = solve_first(1);
  REQUIRE(s1.sol);
  CHECK(s1.sol->qp_objective == doctest::Approx(49330.01789643768).epsilon(1e-6));
}

TEST_CASE("third prior vertex gives an infeasible first step") {
  // An independent LP solver also reports this problem infeasible.
  const auto s = solve_first(2);
  CHECK(!s.sol);
  CHECK(s.status == qp::QpStatus::kInfeasible);
}

TEST_CASE("QP objective equals the tube cost recomputed from the variables") {
  const auto s = solve_first(0);
  REQUIRE(s.sol);
  const double recomputed = tube::tube_cost(*s.sol, s.f.shape.G, s.f.tc.Q, s.f.tc.R, s.f.term.P);
  CHECK(recomputed == doctest::Approx(s.sol->qp_objective).epsilon(1e-6));
  CHECK(s.sol->max_violation <= 1e-9);
}

TEST_CASE("pack and unpack are inverse") {
  const auto s = solve_first(0);
  REQUIRE(s.sol);
  const Vector x = tube::pack(s.tq.layout, *s.sol);
  const auto back = tube::unpack(s.tq.layout, x);
  CHECK((tube::pack(s.tq.layout, back) - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(x.size() == s.tq.layout.size());
}

TEST_CASE("extracted input is admissible and reproduces the estimate") {
  const auto s = solve_first(0);
  REQUIRE(s.sol);
  const auto ex = tube::extract_input(*s.sol, s.f.shape.G, s.f.x_hat);
  CHECK(s.f.tm.U.contains_point(ex.u, 0.0));
  CHECK(ex.residual <= 1e-9 * std::max(1.0, s.f.x_hat.cwiseAbs().maxCoeff()));
  CHECK(ex.weights.minCoeff() >= 0.0);
  CHECK(ex.weights.sum() == doctest::Approx(1.0));
  const Vector far = s.sol->alpha[0] + Vector::Constant(2, 1e3);
  CHECK_THROWS_AS(tube::extract_input(*s.sol, s.f.shape.G, far), Error);
}

TEST_CASE("shifted candidate stays feasible one step later under frozen estimates") {
  auto s = solve_first(0);
  REQUIRE(s.sol);
  auto& f = s.f;
  const auto ex = tube::extract_input(*s.sol, f.shape.G, f.x_hat);
  Vector d(2);
  d << 0.1, -0.1;
  const Vector x1 = f.scn.plant.A * f.scn.plant.x0 + f.scn.plant.B * ex.u + d;
  const auto obs1 = observer::observer_step(f.model, f.obs, ex.u, x1.head(1), false);
  const Vector x_hat1 = observer::state_estimate(f.model, obs1);

  const auto td1 = tube::build_tightening(f.tm, f.tc, f.td.A_hat, f.td.B_hat, obs1.p_hat(f.model.pdim), obs1.Pi,
                                          obs1.X0set, obs1.x0_hat(f.model.pdim), 1, f.cache);
  const auto term1 =
      control::terminal_for_gain(f.term.P, f.term.K, f.td.A_hat, f.td.B_hat, td1.E_bar, td1.Xcal, f.tm.U);
  const auto tq1 = tube::assemble_qp(f.tm, f.tc, td1, f.shape.G, term1, x_hat1);
  const auto cand = tube::shifted_candidate(*s.sol, f.shape.G, f.td.A_hat, f.td.B_hat, f.term.K, td1.E_bar);
  CHECK(tube::max_row_violation(tq1.problem, tube::pack(tq1.layout, cand)) <= 1e-8);
  const auto sol1 = tube::solve_tube(tq1, f.shape.G, f.tc.Q, f.tc.R, term1.P);
  REQUIRE(sol1);
  CHECK(sol1->cost <= tube::tube_cost(cand, f.shape.G, f.tc.Q, f.tc.R, term1.P) + 1e-6 * sol1->cost);
}
