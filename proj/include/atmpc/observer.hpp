#pragma once

#include <vector>

#include "atmpc/control_core.hpp"
#include "atmpc/geometry.hpp"

namespace atmpc::observer {

using geometry::Polytope;

struct ObserverConfig {
  Matrix F;  // n × n, Schur stable, canonical shadow structure
  int n = 0;
  int m = 0;
  int q = 0;
  Polytope D;  // additive disturbance set in ℝⁿ
  double sigma = 0.9;
  double kappa = 0.2;
  int max_vertices_p = 12;
  int max_vertices_x = 12;
  // Outward offset on every noise-set row of the non-falsified set; absorbs
  // floating-point drift in the regressors so the truth is never cut off.
  double noise_slack = 1e-6;
  // Replace the exact 𝒩_{t(0)} sum by C·𝔻^RPI once its increment is below
  // the geometry tolerance (keeps the set's vertex count bounded).
  bool rpi_noise_switch = false;
};

// Fixed quantities of one observer instance: dimensions, filter offset, and the
// affine charts of the prior sets (updates stay inside these affine hulls).
struct ObserverModel {
  ObserverConfig cfg;
  Vector f;
  geometry::AffineChart chart_p;
  geometry::AffineChart chart_x;
  int pdim = 0;   // qn + mn
  int theta_dim = 0;  // pdim + n, also the number of regression stacks

  Matrix C() const;
};

struct RegressionSnapshot {
  Matrix W;
  Vector Y;
  double normalizer = 1.0;
};

struct ObserverState {
  int t = 0;
  Matrix M;
  Matrix Fpow;
  std::vector<Matrix> omega_stack;
  std::vector<Vector> y_stack;
  std::vector<Polytope> N_sets;
  Polytope noise_accum;  // Σ_{j<t} F^j 𝔻 in ℝⁿ
  bool noise_switched = false;
  Vector y_last;  // y_t, consumed by the next filter step

  Vector theta_hat;
  Polytope Pi_local;  // chart coordinates of aff(Π₀)
  Polytope X0_local;  // chart coordinates of aff(𝕏₀₀)
  Polytope Pi;        // ℝ^{pdim}
  Polytope X0set;     // ℝⁿ
  std::vector<control::ParamMatrix> Psi_vertices;

  bool pi_update_halted = false;
  bool x0_update_halted = false;

  Vector p_hat(int pdim) const { return theta_hat.head(pdim); }
  Vector x0_hat(int pdim) const { return theta_hat.tail(theta_hat.size() - pdim); }
};

// Result of the initial-set invariance check (repairs when F·X̃₀₀ ⊄ X̃₀₀).
struct InitialSetCheck {
  Polytope X0;
  bool was_invariant = true;
  int hull_iterations = 0;
};
InitialSetCheck ensure_invariant_initial_set(const Matrix& F, const Polytope& X0, const Vector& xhat0,
                                             int iter_cap = 50);

ObserverModel make_model(const ObserverConfig& cfg, const std::vector<control::ParamMatrix>& psi0_vertices,
                         const Polytope& X00);

ObserverState initial_state(const ObserverModel& model, const std::vector<control::ParamMatrix>& psi0_vertices,
                            const Polytope& X00, const Vector& p_hat0, const Vector& x0_hat0, const Vector& y0);

ObserverState filter_step(const ObserverModel& model, const ObserverState& s, const Matrix& Y_t, const Matrix& U_t);
ObserverState augment_regression(const ObserverModel& model, const ObserverState& s, const Matrix& omega,
                                 const Vector& y);

struct HalfspaceRows {
  Matrix A;
  Vector b;
};
// Ξ_t as rows over θ = [p; x₀]; zero rows (empty stacks) are omitted.
HalfspaceRows nonfalsified_halfspaces(const ObserverModel& model, const ObserverState& s);

// Raises IdentificationInconsistency if the intersection is empty.
ObserverState update_sets(const ObserverModel& model, const ObserverState& s);
RegressionSnapshot snapshot(const ObserverState& s);
ObserverState gradient_update(const ObserverModel& model, const ObserverState& s, const RegressionSnapshot& snap);
Vector state_estimate(const ObserverModel& model, const ObserverState& s);

// One pass of the observer: filter, stacks, and (when adapt) set and point
// updates, consuming u_t and the fresh measurement y_{t+1}.
ObserverState observer_step(const ObserverModel& model, const ObserverState& s, const Vector& u_t,
                            const Vector& y_next, bool adapt);

// Reverts the point estimate and adjoins it to the sets (fallback path).
ObserverState adjoin_estimate(const ObserverModel& model, const ObserverState& s, const Vector& p_hat,
                              const Vector& x0_hat);

// Current estimate as matrices.
control::ParamMatrix estimated_param(const ObserverModel& model, const ObserverState& s);

}  // namespace atmpc::observer
