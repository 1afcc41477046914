#include "atmpc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "atmpc/errors.hpp"

namespace atmpc::scenario {
namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  fail(ErrorCode::kInvalidScenario, where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) invalid(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) invalid(where, "unknown field '" + it.key() + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(where + "." + key, e.what());
  }
}

// Wraps conversions so parse errors name the offending field.
template <typename F>
auto at_path(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    invalid(where, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidScenario) throw;
    invalid(where, e.what());
  }
}

control::ParamMatrix param_from_json(const json& j, int q, const std::string& where) {
  reject_unknown(j, {"A", "B"}, where);
  return at_path(where, [&] {
    return control::make_param_matrix(matrix_from_json(field(j, "A", where)), matrix_from_json(field(j, "B", where)), q);
  });
}

json param_to_json(const control::ParamMatrix& p) {
  return json{{"A", matrix_to_json(p.A())}, {"B", matrix_to_json(p.B())}};
}

}  // namespace

Matrix matrix_from_json(const json& j) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(ErrorCode::kInvalidScenario, "matrix must be a non-empty list of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = j[0].is_array() ? static_cast<int>(j[0].size()) : 1;
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array()) {
      if (cols != 1) fail(ErrorCode::kInvalidScenario, "ragged matrix");
      M(r, 0) = j[r].get<double>();
      continue;
    }
    if (static_cast<int>(j[r].size()) != cols) fail(ErrorCode::kInvalidScenario, "ragged matrix");
    for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(ErrorCode::kInvalidScenario, "vector must be a non-empty list");
  Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

geometry::Polytope polytope_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) fail(ErrorCode::kInvalidScenario, "polytope needs exactly one of box/vertices/hrep");
  if (j.contains("box")) {
    const json& b = j.at("box");
    if (b.contains("radius")) {
      const double r = b.at("radius").get<double>();
      const int dim = b.value("dim", 1);
      if (dim < 1 || r < 0.0) fail(ErrorCode::kInvalidScenario, "box radius must be ≥ 0 and dim ≥ 1");
      return geometry::Polytope::box(dim, r);
    }
    const Vector lo = vector_from_json(b.at("lower")), hi = vector_from_json(b.at("upper"));
    if (lo.size() != hi.size() || (hi - lo).minCoeff() < 0.0)
      fail(ErrorCode::kInvalidScenario, "box bounds must have equal length and lower ≤ upper");
    return geometry::Polytope::box(lo, hi);
  }
  if (j.contains("vertices")) {
    const json& vs = j.at("vertices");
    if (!vs.is_array() || vs.empty()) fail(ErrorCode::kInvalidScenario, "vertex list must be non-empty");
    const int dim = static_cast<int>(vs[0].size());
    Matrix V(dim, static_cast<int>(vs.size()));
    for (int k = 0; k < V.cols(); ++k) {
      const Vector v = vector_from_json(vs[k]);
      if (v.size() != dim) fail(ErrorCode::kInvalidScenario, "vertices have mixed dimensions");
      V.col(k) = v;
    }
    return geometry::Polytope::from_vertices(V);
  }
  if (j.contains("hrep")) {
    const json& h = j.at("hrep");
    const Matrix A = matrix_from_json(h.at("A"));
    const Vector b = vector_from_json(h.at("b"));
    if (A.rows() != b.size()) fail(ErrorCode::kInvalidScenario, "hrep rows of A and b differ");
    const geometry::Polytope P = geometry::complete(geometry::Polytope::from_halfspaces(A, b));
    if (P.is_empty()) fail(ErrorCode::kInvalidScenario, "hrep describes an empty set");
    return P;
  }
  fail(ErrorCode::kInvalidScenario, "polytope needs exactly one of box/vertices/hrep");
}

json polytope_to_json(const geometry::Polytope& P) {
  const geometry::Polytope Pv = geometry::to_vrep(P);
  // Lexicographic vertex order makes the text independent of how P was built.
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < Pv.num_vertices(); ++k) {
    const Vector v = Pv.V().col(k);
    rows.emplace_back(v.data(), v.data() + v.size());
  }
  std::sort(rows.begin(), rows.end());
  json vs = json::array();
  for (const auto& r : rows) vs.push_back(r);
  return json{{"vertices", vs}};
}

sim::Scenario from_json(const json& j) {
  reject_unknown(j, {"name", "plant", "priors", "observer", "controller", "caps", "run"}, "scenario");
  sim::Scenario s;
  s.name = get_or<std::string>(j, "name", "scenario", "scenario");

  const json& pl = field(j, "plant", "scenario");
  reject_unknown(pl, {"A", "B", "q", "x0", "state_set", "input_set", "disturbance_set"}, "plant");
  s.plant.A = at_path("plant.A", [&] { return matrix_from_json(field(pl, "A", "plant")); });
  s.plant.B = at_path("plant.B", [&] { return matrix_from_json(field(pl, "B", "plant")); });
  s.plant.q = get_or<int>(pl, "q", 1, "plant");
  s.plant.x0 = at_path("plant.x0", [&] { return vector_from_json(field(pl, "x0", "plant")); });
  s.plant.X = at_path("plant.state_set", [&] { return polytope_from_json(field(pl, "state_set", "plant")); });
  s.plant.U = at_path("plant.input_set", [&] { return polytope_from_json(field(pl, "input_set", "plant")); });
  s.plant.D = at_path("plant.disturbance_set", [&] { return polytope_from_json(field(pl, "disturbance_set", "plant")); });

  const json& pr = field(j, "priors", "scenario");
  reject_unknown(pr, {"parameter_vertices", "initial_state_set", "initial_state_estimate", "parameter_estimate"},
                 "priors");
  const json& verts = field(pr, "parameter_vertices", "priors");
  if (!verts.is_array() || verts.empty()) invalid("priors.parameter_vertices", "expected a non-empty list");
  for (std::size_t k = 0; k < verts.size(); ++k)
    s.psi0.push_back(param_from_json(verts[k], s.plant.q, "priors.parameter_vertices[" + std::to_string(k) + "]"));
  s.X00 = at_path("priors.initial_state_set", [&] { return polytope_from_json(field(pr, "initial_state_set", "priors")); });
  s.x0_hat0 = at_path("priors.initial_state_estimate",
                      [&] { return vector_from_json(field(pr, "initial_state_estimate", "priors")); });
  const json& est = field(pr, "parameter_estimate", "priors");
  if (est.is_object() && est.contains("vertex")) {
    reject_unknown(est, {"vertex"}, "priors.parameter_estimate");
    const int k = get_or<int>(est, "vertex", 0, "priors.parameter_estimate");
    if (k < 0 || k >= static_cast<int>(s.psi0.size())) invalid("priors.parameter_estimate.vertex", "index out of range");
    s.psi_hat0 = s.psi0[k];
  } else {
    s.psi_hat0 = param_from_json(est, s.plant.q, "priors.parameter_estimate");
  }

  const json& ob = field(j, "observer", "scenario");
  reject_unknown(ob, {"F", "kappa", "sigma"}, "observer");
  s.F = at_path("observer.F", [&] { return matrix_from_json(field(ob, "F", "observer")); });
  s.kappa = get_or<double>(ob, "kappa", s.kappa, "observer");
  s.sigma = get_or<double>(ob, "sigma", s.sigma, "observer");

  const json& ct = field(j, "controller", "scenario");
  reject_unknown(ct, {"horizon", "Q", "R"}, "controller");
  s.N = get_or<int>(ct, "horizon", s.N, "controller");
  s.Q = at_path("controller.Q", [&] { return matrix_from_json(field(ct, "Q", "controller")); });
  s.R = at_path("controller.R", [&] { return matrix_from_json(field(ct, "R", "controller")); });

  if (j.contains("caps")) {
    const json& c = j.at("caps");
    reject_unknown(c, {"max_parameter_vertices", "max_initial_state_vertices", "max_shape_vertices"}, "caps");
    s.max_vertices_p = get_or<int>(c, "max_parameter_vertices", s.max_vertices_p, "caps");
    s.max_vertices_x = get_or<int>(c, "max_initial_state_vertices", s.max_vertices_x, "caps");
    s.max_shape_vertices = get_or<int>(c, "max_shape_vertices", s.max_shape_vertices, "caps");
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    reject_unknown(r, {"mode", "backup_input", "disturbance", "kind", "excitation", "seed", "steps"}, "run");
    at_path("run", [&] {
      s.mode = sim::mode_from_string(get_or<std::string>(r, "mode", sim::to_string(s.mode), "run"));
      s.backup_input =
          sim::backup_input_from_string(get_or<std::string>(r, "backup_input", sim::to_string(s.backup_input), "run"));
      s.disturbance =
          sim::disturbance_from_string(get_or<std::string>(r, "disturbance", sim::to_string(s.disturbance), "run"));
      s.kind = sim::run_kind_from_string(get_or<std::string>(r, "kind", sim::to_string(s.kind), "run"));
      return 0;
    });
    s.excitation = get_or<double>(r, "excitation", s.excitation, "run");
    s.seed = get_or<std::uint64_t>(r, "seed", s.seed, "run");
    s.steps = get_or<int>(r, "steps", s.steps, "run");
  }
  sim::validate(s);
  return s;
}

json to_json(const sim::Scenario& s) {
  json verts = json::array();
  for (const auto& v : s.psi0) verts.push_back(param_to_json(v));
  return json{
      {"name", s.name},
      {"plant",
       {{"A", matrix_to_json(s.plant.A)},
        {"B", matrix_to_json(s.plant.B)},
        {"q", s.plant.q},
        {"x0", vector_to_json(s.plant.x0)},
        {"state_set", polytope_to_json(s.plant.X)},
        {"input_set", polytope_to_json(s.plant.U)},
        {"disturbance_set", polytope_to_json(s.plant.D)}}},
      {"priors",
       {{"parameter_vertices", verts},
        {"initial_state_set", polytope_to_json(s.X00)},
        {"initial_state_estimate", vector_to_json(s.x0_hat0)},
        {"parameter_estimate", param_to_json(s.psi_hat0)}}},
      {"observer", {{"F", matrix_to_json(s.F)}, {"kappa", s.kappa}, {"sigma", s.sigma}}},
      {"controller", {{"horizon", s.N}, {"Q", matrix_to_json(s.Q)}, {"R", matrix_to_json(s.R)}}},
      {"caps",
       {{"max_parameter_vertices", s.max_vertices_p},
        {"max_initial_state_vertices", s.max_vertices_x},
        {"max_shape_vertices", s.max_shape_vertices}}},
      {"run",
       {{"mode", sim::to_string(s.mode)},
        {"backup_input", sim::to_string(s.backup_input)},
        {"disturbance", sim::to_string(s.disturbance)},
        {"kind", sim::to_string(s.kind)},
        {"excitation", s.excitation},
        {"seed", s.seed},
        {"steps", s.steps}}},
  };
}

sim::Scenario load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kInvalidScenario, "cannot open scenario file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidScenario, "'" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void save(const sim::Scenario& scn, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kInvalidScenario, "cannot write scenario file '" + path + "'");
  out << to_json(scn).dump(2) << '\n';
}

sim::Scenario reference_example() {
  sim::Scenario s;
  s.name = "reference_example";
  s.plant.A.resize(2, 2);
  s.plant.A << -1.2, 1.0, 0.2, 0.0;
  s.plant.B.resize(2, 1);
  s.plant.B << 4.0, -3.233;
  s.plant.q = 1;
  s.plant.X = geometry::Polytope::box(2, 40.0);
  s.plant.U = geometry::Polytope::box(1, 4.0);
  s.plant.D = geometry::Polytope::box(2, 0.1);
  s.plant.x0.resize(2);
  s.plant.x0 << 12.0, 39.0;

  Matrix A1(2, 2), A2(2, 2), A3(2, 2), B1(2, 1), B2(2, 1), B3(2, 1);
  A1 << -1.1, 1.0, 0.2, 0.0;
  A2 << -1.2, 1.0, 0.2, 0.0;
  A3 << -1.3, 1.0, 0.2, 0.0;
  B1 << 4.0, -3.1;
  B2 << 4.0, -3.0;
  B3 << 4.0, -3.6;
  s.psi0 = {control::make_param_matrix(A1, B1, 1), control::make_param_matrix(A2, B2, 1),
            control::make_param_matrix(A3, B3, 1)};
  Vector lo(2), hi(2);
  lo << 11.0, 22.5;
  hi << 29.0, 39.5;
  s.X00 = geometry::Polytope::box(lo, hi);
  s.x0_hat0.resize(2);
  s.x0_hat0 << 20.0, 31.0;
  s.psi_hat0 = s.psi0[0];
  s.F.resize(2, 2);
  s.F << 0.03, 1.0, 0.01, 0.0;
  s.N = 10;
  s.Q = Matrix::Identity(2, 2);
  s.R = Matrix::Constant(1, 1, 0.1);
  s.kappa = 0.2;
  s.sigma = 0.9;
  s.steps = 40;
  s.seed = 1;
  return s;
}

}  // namespace atmpc::scenario
