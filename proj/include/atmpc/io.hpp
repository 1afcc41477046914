#pragma once

#include <string>

#include <json.hpp>

#include "atmpc/qp.hpp"
#include "atmpc/simulator.hpp"

namespace atmpc::io {

using json = nlohmann::json;

json record_to_json(const sim::StepRecord& r);
sim::StepRecord record_from_json(const json& j);
json summary_to_json(const sim::RunSummary& s);
sim::RunSummary summary_from_json(const json& j);

// One JSON object per line, records first, summary last (tagged "summary").
// No timing data, so equal runs serialize to equal bytes.
std::string to_jsonl(const sim::RunLog& log);
sim::RunLog from_jsonl(const std::string& text);

// Writes run.jsonl and summary.json into dir (created if missing).
void write_run_log(const sim::RunLog& log, const std::string& dir);
sim::RunLog read_run_log(const std::string& dir);

// Per-figure CSVs plus plot_spec.json naming the columns each figure uses:
// state_trace.csv, tube_vertices.csv, set_volumes.csv, cost_trace.csv.
void write_figure_data(const sim::RunLog& log, const std::string& dir);

// Portable form {"Hq", "g", "Arows", "b"} for solver cross-checks; equality
// rows, when present, go under "Aeq" and "beq".
json qp_to_json(const qp::QpProblem& p);
qp::QpProblem qp_from_json(const json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace atmpc::io
