#pragma once

#include <string>

#include <json.hpp>

#include "atmpc/geometry.hpp"
#include "atmpc/simulator.hpp"

namespace atmpc::scenario {

using json = nlohmann::json;

// Polytope blocks accept exactly one of
//   {"box": {"radius": r, "dim": n}} | {"box": {"lower": [...], "upper": [...]}}
//   {"vertices": [[...], ...]}        | {"hrep": {"A": [[...], ...], "b": [...]}}
geometry::Polytope polytope_from_json(const json& j);
// Writes the vertex form (always available for bounded sets).
json polytope_to_json(const geometry::Polytope& P);

Matrix matrix_from_json(const json& j);
json matrix_to_json(const Matrix& M);
Vector vector_from_json(const json& j);
json vector_to_json(const Vector& v);

// Parses and validates; every failure raises InvalidScenario with the field path.
sim::Scenario from_json(const json& j);
json to_json(const sim::Scenario& scn);

sim::Scenario load(const std::string& path);
void save(const sim::Scenario& scn, const std::string& path);

// The two-state benchmark with the published priors and weights; the initial
// estimate is the first prior vertex.
sim::Scenario reference_example();

}  // namespace atmpc::scenario
