#pragma once

#include "atmpc/observer.hpp"
#include "atmpc/scenario.hpp"
#include "atmpc/tube_mpc.hpp"

namespace fixture {

using namespace atmpc;

// First-step controller data of the two-state benchmark, built the way the
// closed loop builds it.
struct FirstStep {
  sim::Scenario scn;
  observer::ObserverModel model;
  observer::ObserverState obs;
  tube::TubeModel tm;
  tube::TubeConfig tc;
  tube::RpiCache cache;
  tube::TighteningData td;
  control::TerminalIngredients term;
  tube::ShapeSet shape;
  Vector x_hat;
};

inline FirstStep first_step(int prior_vertex = 0) {
  FirstStep f;
  f.scn = scenario::reference_example();
  f.scn.psi_hat0 = f.scn.psi0[prior_vertex];
  const auto chk = observer::ensure_invariant_initial_set(f.scn.F, f.scn.X00, f.scn.x0_hat0);
  observer::ObserverConfig oc;
  oc.F = f.scn.F;
  oc.n = 2;
  oc.m = 1;
  oc.q = 1;
  oc.D = f.scn.plant.D;
  oc.kappa = f.scn.kappa;
  oc.sigma = f.scn.sigma;
  f.model = observer::make_model(oc, f.scn.psi0, chk.X0);
  const Vector p_hat0 = control::z1_forward(f.scn.psi_hat0, f.model.f);
  f.obs = observer::initial_state(f.model, f.scn.psi0, chk.X0, p_hat0, f.scn.x0_hat0, f.scn.plant.x0.head(1));
  f.x_hat = observer::state_estimate(f.model, f.obs);
  f.tm.F = f.scn.F;
  f.tm.C = f.model.C();
  f.tm.n = 2;
  f.tm.m = 1;
  f.tm.q = 1;
  f.tm.X = f.scn.plant.X;
  f.tm.U = f.scn.plant.U;
  f.tm.D = f.scn.plant.D;
  f.tc.N = f.scn.N;
  f.tc.Q = f.scn.Q;
  f.tc.R = f.scn.R;
  const auto est = observer::estimated_param(f.model, f.obs);
  f.td = tube::build_tightening(f.tm, f.tc, est.A(), est.B(), f.obs.p_hat(f.model.pdim), f.obs.Pi, f.obs.X0set,
                                f.obs.x0_hat(f.model.pdim), 0, f.cache);
  f.term = control::synthesize_terminal(est.A(), est.B(), f.tc.Q, f.tc.R, f.td.E_bar, f.td.Xcal, f.tm.U, nullptr);
  f.shape = tube::build_shape_set(est.A() + est.B() * f.term.K, f.td.E_hat, f.tc);
  f.shape.G = geometry::complete(f.shape.G);
  return f;
}

}  // namespace fixture
