#include "atmpc/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "atmpc/errors.hpp"
#include "atmpc/scenario.hpp"

namespace atmpc::io {
namespace {

using scenario::matrix_from_json;
using scenario::matrix_to_json;
using scenario::vector_from_json;
using scenario::vector_to_json;

// Empty matrices and vectors serialize as [] and read back empty.
json mat(const Matrix& M) { return M.size() == 0 ? json::array() : matrix_to_json(M); }
json vec(const Vector& v) { return v.size() == 0 ? json::array() : vector_to_json(v); }
Matrix mat_in(const json& j) { return j.is_array() && j.empty() ? Matrix() : matrix_from_json(j); }
Vector vec_in(const json& j) { return j.is_array() && j.empty() ? Vector() : vector_from_json(j); }

json monitor_to_json(const sim::MonitorConstants& k) {
  return json{{"type", "monitor"},     {"N", k.N},
              {"Q", mat(k.Q)},         {"R", mat(k.R)},
              {"Xfeas_vertices", mat(k.Xfeas_vertices)},
              {"U_vertices", mat(k.U_vertices)},
              {"H_max", k.H_max}};
}

sim::MonitorConstants monitor_from_json(const json& j) {
  sim::MonitorConstants k;
  k.N = j.at("N").get<int>();
  k.Q = mat_in(j.at("Q"));
  k.R = mat_in(j.at("R"));
  k.Xfeas_vertices = mat_in(j.at("Xfeas_vertices"));
  k.U_vertices = mat_in(j.at("U_vertices"));
  k.H_max = j.at("H_max").get<int>();
  return k;
}

// Vertex list written as rows (one vertex per row) for plotting tools.
void write_vertices(std::ostream& out, int t, const char* kind, const Matrix& V) {
  for (int k = 0; k < V.cols(); ++k) {
    out << t << ',' << kind << ',' << k;
    for (int i = 0; i < V.rows(); ++i) out << ',' << V(i, k);
    out << '\n';
  }
}

std::string join_header(const std::string& prefix, int count) {
  std::string s;
  for (int i = 0; i < count; ++i) s += "," + prefix + std::to_string(i);
  return s;
}

}  // namespace

json record_to_json(const sim::StepRecord& r) {
  json alpha = json::array();
  for (const auto& a : r.alpha) alpha.push_back(vec(a));
  return json{
      {"type", "step"},
      {"t", r.t},
      {"x", vec(r.x)},
      {"x_hat", vec(r.x_hat)},
      {"u", vec(r.u)},
      {"cost", r.cost},
      {"backup", r.backup},
      {"backup_reason", r.backup_reason},
      {"criterion", {r.crit_a, r.crit_b, r.crit_c}},
      {"candidate_violation", r.candidate_violation},
      {"vol_pi", r.vol_pi},
      {"vol_x0", r.vol_x0},
      {"alpha", alpha},
      {"beta", vec(r.beta)},
      {"H", r.H},
      {"err_p", r.err_p},
      {"err_x", r.err_x},
      {"err_theta", r.err_theta},
      {"diam_pi", r.diam_pi},
      {"hard_ok", r.hard_ok},
      {"outer_tube_ok", r.outer_tube_ok},
      {"truth_in_sets", r.truth_in_sets},
      {"sets_nested", r.sets_nested},
      {"P", mat(r.P)},
      {"E_bar_vertices", mat(r.E_bar_vertices)},
      {"tube0_vertices", mat(r.tube0_vertices)},
      {"outer_tube_vertices", mat(r.outer_tube_vertices)},
  };
}

sim::StepRecord record_from_json(const json& j) {
  sim::StepRecord r;
  r.t = j.at("t").get<int>();
  r.x = vec_in(j.at("x"));
  r.x_hat = vec_in(j.at("x_hat"));
  r.u = vec_in(j.at("u"));
  r.cost = j.at("cost").get<double>();
  r.backup = j.at("backup").get<bool>();
  r.backup_reason = j.at("backup_reason").get<std::string>();
  const json& c = j.at("criterion");
  r.crit_a = c.at(0).get<bool>();
  r.crit_b = c.at(1).get<bool>();
  r.crit_c = c.at(2).get<bool>();
  r.candidate_violation = j.at("candidate_violation").get<double>();
  r.vol_pi = j.at("vol_pi").get<double>();
  r.vol_x0 = j.at("vol_x0").get<double>();
  for (const auto& a : j.at("alpha")) r.alpha.push_back(vec_in(a));
  r.beta = vec_in(j.at("beta"));
  r.H = j.at("H").get<int>();
  r.err_p = j.at("err_p").get<double>();
  r.err_x = j.at("err_x").get<double>();
  r.err_theta = j.at("err_theta").get<double>();
  r.diam_pi = j.at("diam_pi").get<double>();
  r.hard_ok = j.at("hard_ok").get<bool>();
  r.outer_tube_ok = j.at("outer_tube_ok").get<bool>();
  r.truth_in_sets = j.at("truth_in_sets").get<bool>();
  r.sets_nested = j.at("sets_nested").get<bool>();
  r.P = mat_in(j.at("P"));
  r.E_bar_vertices = mat_in(j.at("E_bar_vertices"));
  r.tube0_vertices = mat_in(j.at("tube0_vertices"));
  r.outer_tube_vertices = mat_in(j.at("outer_tube_vertices"));
  return r;
}

json summary_to_json(const sim::RunSummary& s) {
  return json{{"type", "summary"},
              {"scenario", s.scenario},
              {"mode", s.mode},
              {"seed", s.seed},
              {"steps", s.steps},
              {"backups", s.backups},
              {"completed", s.completed},
              {"termination", s.termination},
              {"rms_x", s.rms_x},
              {"cumulative_cost", s.cumulative_cost},
              {"final_x", vec(s.final_x)}};
}

sim::RunSummary summary_from_json(const json& j) {
  sim::RunSummary s;
  s.scenario = j.at("scenario").get<std::string>();
  s.mode = j.at("mode").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.steps = j.at("steps").get<int>();
  s.backups = j.at("backups").get<int>();
  s.completed = j.at("completed").get<bool>();
  s.termination = j.at("termination").get<std::string>();
  s.rms_x = j.at("rms_x").get<double>();
  s.cumulative_cost = j.at("cumulative_cost").get<double>();
  s.final_x = vec_in(j.at("final_x"));
  return s;
}

std::string to_jsonl(const sim::RunLog& log) {
  std::string out;
  for (const auto& r : log.records) out += record_to_json(r).dump() + '\n';
  out += monitor_to_json(log.monitor).dump() + '\n';
  out += summary_to_json(log.summary).dump() + '\n';
  return out;
}

sim::RunLog from_jsonl(const std::string& text) {
  sim::RunLog log;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "step") log.records.push_back(record_from_json(j));
      else if (type == "monitor") log.monitor = monitor_from_json(j);
      else if (type == "summary") log.summary = summary_from_json(j);
      else fail(ErrorCode::kInvalidScenario, "unknown record type '" + type + "'");
    } catch (const json::exception& e) {
      fail(ErrorCode::kInvalidScenario, "run log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInvalidScenario, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kInvalidScenario, "cannot write '" + path + "'");
  out << text;
}

void write_run_log(const sim::RunLog& log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/run.jsonl", to_jsonl(log));
  write_file(dir + "/summary.json", summary_to_json(log.summary).dump(2) + '\n');
}

sim::RunLog read_run_log(const std::string& dir) { return from_jsonl(read_file(dir + "/run.jsonl")); }

void write_figure_data(const sim::RunLog& log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const int n = log.records.empty() ? 0 : static_cast<int>(log.records[0].x.size());
  const int m = log.records.empty() ? 0 : static_cast<int>(log.records[0].u.size());

  std::ostringstream st;
  st.precision(17);
  st << "t" << join_header("x", n) << join_header("x_hat", n) << join_header("u", m) << ",norm_x\n";
  for (const auto& r : log.records) {
    st << r.t;
    for (int i = 0; i < n; ++i) st << ',' << r.x(i);
    for (int i = 0; i < n; ++i) st << ',' << r.x_hat(i);
    for (int i = 0; i < m; ++i) st << ',' << r.u(i);
    st << ',' << r.x.norm() << '\n';
  }
  write_file(dir + "/state_trace.csv", st.str());

  std::ostringstream tv;
  tv.precision(17);
  tv << "t,kind,vertex" << join_header("c", n) << '\n';
  for (const auto& r : log.records) {
    write_vertices(tv, r.t, "tube0", r.tube0_vertices);
    write_vertices(tv, r.t, "outer", r.outer_tube_vertices);
  }
  write_file(dir + "/tube_vertices.csv", tv.str());

  std::ostringstream sv;
  sv.precision(17);
  sv << "t,vol_pi,vol_x0,diam_pi,err_p,err_x,err_theta\n";
  for (const auto& r : log.records)
    sv << r.t << ',' << r.vol_pi << ',' << r.vol_x0 << ',' << r.diam_pi << ',' << r.err_p << ',' << r.err_x << ','
       << r.err_theta << '\n';
  write_file(dir + "/set_volumes.csv", sv.str());

  std::ostringstream ct;
  ct.precision(17);
  ct << "t,cost,backup,H,beta0\n";
  for (const auto& r : log.records)
    ct << r.t << ',' << r.cost << ',' << (r.backup ? 1 : 0) << ',' << r.H << ','
       << (r.beta.size() ? r.beta(0) : 0.0) << '\n';
  write_file(dir + "/cost_trace.csv", ct.str());

  const json spec = {
      {"figures",
       json::array({
           {{"name", "states"}, {"file", "state_trace.csv"}, {"x", "t"}, {"y", {"x0", "x1", "x_hat0", "x_hat1"}}},
           {{"name", "input"}, {"file", "state_trace.csv"}, {"x", "t"}, {"y", {"u0"}}},
           {{"name", "tubes"}, {"file", "tube_vertices.csv"}, {"group", {"t", "kind"}}, {"polygon", {"c0", "c1"}}},
           {{"name", "uncertainty_sets"}, {"file", "set_volumes.csv"}, {"x", "t"}, {"y", {"vol_pi", "vol_x0"}}},
           {{"name", "estimation_error"}, {"file", "set_volumes.csv"}, {"x", "t"}, {"y", {"err_p", "err_x"}}},
           {{"name", "optimal_cost"}, {"file", "cost_trace.csv"}, {"x", "t"}, {"y", {"cost"}}},
       })},
      {"scenario", log.summary.scenario},
      {"mode", log.summary.mode}};
  write_file(dir + "/plot_spec.json", spec.dump(2) + '\n');
}

json qp_to_json(const qp::QpProblem& p) {
  const Matrix A = Matrix(p.A_ineq);
  json out = {{"Hq", mat(p.H)}, {"g", vec(p.g)}, {"Arows", mat(A)}, {"b", vec(p.b_ineq)}};
  if (p.A_eq.rows() > 0) {
    out["Aeq"] = mat(p.A_eq);
    out["beq"] = vec(p.b_eq);
  }
  return out;
}

qp::QpProblem qp_from_json(const json& j) {
  qp::QpProblem p;
  p.H = mat_in(j.at("Hq"));
  p.g = vec_in(j.at("g"));
  const Matrix A = mat_in(j.at("Arows"));
  p.A_ineq = A.size() ? qp::SparseRows(A.sparseView()) : qp::SparseRows(0, p.g.size());
  p.b_ineq = vec_in(j.at("b"));
  if (j.contains("Aeq")) {
    p.A_eq = mat_in(j.at("Aeq"));
    p.b_eq = vec_in(j.at("beq"));
  } else {
    p.A_eq = Matrix(0, p.g.size());
    p.b_eq = Vector(0);
  }
  return p;
}

}  // namespace atmpc::io
