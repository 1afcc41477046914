#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "atmpc/control_core.hpp"
#include "atmpc/errors.hpp"
#include "atmpc/geometry.hpp"
#include "atmpc/io.hpp"
#include "atmpc/scenario.hpp"
#include "atmpc/selftest.hpp"
#include "atmpc/simulator.hpp"

namespace py = pybind11;
using namespace atmpc;
using geometry::Polytope;

namespace {

sim::Scenario scenario_from_text(const std::string& text) {
  scenario::json j;
  try {
    j = scenario::json::parse(text);
  } catch (const scenario::json::exception& e) {
    fail(ErrorCode::kInvalidScenario, std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario::from_json(j);
}

}  // namespace

PYBIND11_MODULE(_atmpc, m) {
  m.doc() = "Adaptive tube MPC core: polytopes, Riccati gains and closed-loop runs.";

  py::register_exception<Error>(m, "AtmpcError");

  py::class_<Polytope>(m, "Polytope")
      .def_static("from_vertices", &Polytope::from_vertices, py::arg("V"),
                  "Polytope spanned by the columns of V (dim x count).")
      .def_static("from_halfspaces", &Polytope::from_halfspaces, py::arg("A"), py::arg("b"))
      .def_static("box", py::overload_cast<const Vector&, const Vector&>(&Polytope::box), py::arg("lower"),
                  py::arg("upper"))
      .def_static("cube", py::overload_cast<int, double>(&Polytope::box), py::arg("dim"), py::arg("radius"))
      .def_property_readonly("dim", &Polytope::dim)
      .def_property_readonly("is_empty", &Polytope::is_empty)
      .def_property_readonly("vertices", [](const Polytope& P) { return geometry::to_vrep(P).V(); })
      .def_property_readonly("A", [](const Polytope& P) { return geometry::to_hrep(P).A(); })
      .def_property_readonly("b", [](const Polytope& P) { return geometry::to_hrep(P).b(); })
      .def("support", [](const Polytope& P, const Vector& a) { return geometry::to_vrep(P).support(a); })
      .def("contains", [](const Polytope& P, const Vector& x, double tol) { return P.contains_point(x, tol); },
           py::arg("x"), py::arg("tol") = geometry::kTolGeo)
      .def("volume", [](const Polytope& P) { return geometry::volume(P); });

  m.def("minkowski_sum", &geometry::minkowski_sum, py::arg("P"), py::arg("Q"));
  m.def("pontryagin_diff", &geometry::pontryagin_diff, py::arg("P"), py::arg("Q"));
  m.def("contains", [](const Polytope& P, const Polytope& Q, double tol) { return geometry::contains(P, Q, tol); },
        py::arg("P"), py::arg("Q"), py::arg("tol") = geometry::kTolGeo);
  m.def("mrpi_outer", [](const Matrix& F, const Polytope& W, double eps) { return geometry::mrpi_outer(F, W, eps); },
        py::arg("F"), py::arg("W"), py::arg("eps") = 1e-3);

  m.def(
      "dare_gain",
      [](const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
        const auto d = control::dare_gain(A, B, Q, R);
        return py::make_tuple(d.P, d.K);
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), "Stabilizing Riccati pair (P, K) with u = K x.");

  m.def(
      "reference_scenario_json", [] { return scenario::to_json(scenario::reference_example()).dump(2); },
      "The two-state benchmark scenario as JSON text.");
  m.def(
      "validate_scenario", [](const std::string& text) { scenario_from_text(text); }, py::arg("scenario_json"),
      "Raises AtmpcError when the scenario is invalid.");
  m.def(
      "run_jsonl",
      [](const std::string& text, std::optional<int> steps) {
        sim::Scenario s = scenario_from_text(text);
        if (steps) s.steps = *steps;
        py::gil_scoped_release release;
        return io::to_jsonl(sim::run_closed_loop(s));
      },
      py::arg("scenario_json"), py::arg("steps") = py::none(), "Runs a scenario; returns the JSONL run log.");
  m.def(
      "selftest",
      [](const std::string& suite, std::uint64_t seed) {
        const auto r = selftest::run_suite(suite, seed);
        return py::make_tuple(r.passed, r.checks, r.failures);
      },
      py::arg("suite"), py::arg("seed") = 7, "Runs a built-in suite; returns (passed, checks, failures).");
}
