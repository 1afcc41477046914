#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "atmpc/control_core.hpp"
#include "atmpc/geometry.hpp"
#include "atmpc/observer.hpp"
#include "atmpc/tube_mpc.hpp"

namespace atmpc::sim {

using geometry::Polytope;

enum class Mode { kAdaptive, kFrozen, kLuenberger };
enum class BackupInput { kFreshSolve, kShiftPrevious };
enum class DisturbanceMode { kUniform, kAdversarial };
enum class RunKind { kClosedLoop, kIdentification };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);
const char* to_string(BackupInput b);
BackupInput backup_input_from_string(const std::string& s);
const char* to_string(DisturbanceMode d);
DisturbanceMode disturbance_from_string(const std::string& s);
const char* to_string(RunKind k);
RunKind run_kind_from_string(const std::string& s);

struct PlantModel {
  Matrix A;
  Matrix B;
  int q = 1;  // C = [I_q 0]
  Polytope X;
  Polytope U;
  Polytope D;
  Vector x0;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  Matrix C() const;
};

struct Scenario {
  std::string name = "scenario";
  PlantModel plant;
  std::vector<control::ParamMatrix> psi0;  // prior parameter vertices
  Polytope X00;                            // prior initial-state set
  Vector x0_hat0;
  control::ParamMatrix psi_hat0;
  Matrix F;
  int N = 10;
  Matrix Q;
  Matrix R;
  double kappa = 0.2;
  double sigma = 0.9;
  int max_vertices_p = 12;
  int max_vertices_x = 12;
  int max_shape_vertices = 16;
  Mode mode = Mode::kAdaptive;
  BackupInput backup_input = BackupInput::kFreshSolve;
  DisturbanceMode disturbance = DisturbanceMode::kUniform;
  RunKind kind = RunKind::kClosedLoop;
  double excitation = 1.0;  // identification runs: input amplitude as a fraction of 𝕌
  std::uint64_t seed = 1;
  int steps = 40;
};

// Raises InvalidScenario naming the violated premise.
void validate(const Scenario& scn);

// Same scenario with a seeded random truth: ψ drawn from Ψ₀ by random convex
// weights, x₀ uniform in 𝕏₀; the disturbance seed is set to `seed` as well.
Scenario randomized(const Scenario& scn, std::uint64_t seed);

std::pair<Vector, Vector> step_plant(const PlantModel& plant, const Vector& x, const Vector& u, const Vector& d);

class DisturbanceSource {
 public:
  DisturbanceSource(const Polytope& D, DisturbanceMode mode, std::uint64_t seed);
  Vector next();

 private:
  Polytope D_;
  DisturbanceMode mode_;
  std::mt19937_64 rng_;
  Vector lo_;
  Vector hi_;
  int cursor_ = 0;
};

struct StepRecord {
  int t = 0;
  Vector x;
  Vector x_hat;
  Vector u;
  double cost = 0.0;  // J*_t
  bool backup = false;
  std::string backup_reason;
  bool crit_a = false;
  bool crit_b = false;
  bool crit_c = false;
  double candidate_violation = 0.0;  // shifted candidate vs. the backup QP, when backed up
  double vol_pi = 0.0;
  double vol_x0 = 0.0;
  std::vector<Vector> alpha;
  Vector beta;
  int H = 0;
  double err_p = 0.0;  // ‖p̂ − p‖₂
  double err_x = 0.0;  // ‖x̂ − x‖₂
  double err_theta = 0.0;
  double diam_pi = 0.0;
  bool hard_ok = true;
  bool outer_tube_ok = true;
  bool truth_in_sets = true;
  bool sets_nested = true;
  Matrix P;
  Matrix E_bar_vertices;
  Matrix tube0_vertices;
  Matrix outer_tube_vertices;
};

// Constants of the cost-decrease monitor.
struct MonitorConstants {
  int N = 0;
  Matrix Q;
  Matrix R;
  Matrix Xfeas_vertices;  // vertices of 𝕏 ⊖ 𝒳̄₀
  Matrix U_vertices;
  int H_max = 16;
};

struct RunSummary {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  int steps = 0;
  int backups = 0;
  bool completed = false;
  std::string termination;
  double rms_x = 0.0;
  double cumulative_cost = 0.0;  // Σ ‖x_t‖²_Q + ‖u_t‖²_R on true states
  Vector final_x;
};

struct RunLog {
  std::vector<StepRecord> records;
  RunSummary summary;
  MonitorConstants monitor;
};

RunLog run_closed_loop(const Scenario& scn);
RunLog run_luenberger_reference(const Scenario& scn);

// Observer-only run with a seeded exciting input (no MPC).
RunLog run_identification(const Scenario& scn);

// Luenberger recursion replayed on the (u, y) data of a run; returns ẑ_t per record.
std::vector<Vector> luenberger_replay(const Scenario& scn, const RunLog& log);

// L_obs with Â − L_obs C = F; raises NoValidGain when the shadow columns differ.
Matrix luenberger_gain(const Matrix& A_hat, const Matrix& F, int q);

struct MonitorReport {
  std::vector<double> gamma3;  // per transition t → t+1
  std::vector<int> violations;
  double gamma1 = 0.0;
  int H_min = 0;
};
MonitorReport lyapunov_monitor(const RunLog& log, const MonitorConstants& k);

// RMS of ‖x_t‖₂ over t ∈ [from, to]; t = steps refers to the final state.
double rms(const RunLog& log, int from, int to);

}  // namespace atmpc::sim
