// Command-line front end. Exit codes: 0 success, 1 run or selftest failure,
// 2 invalid scenario or usage, 3 initially infeasible setup.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "atmpc/errors.hpp"
#include "atmpc/io.hpp"
#include "atmpc/scenario.hpp"
#include "atmpc/selftest.hpp"
#include "atmpc/simulator.hpp"

namespace {

using namespace atmpc;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

struct Options {
  std::string scenario_path;
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> mode;
  std::optional<int> steps;
  bool random_truth = false;
  std::string suite;
  int workers = 1;
};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidScenario: return kExitInvalid;
    case ErrorCode::kInitiallyInfeasible: return kExitInfeasible;
    default: return kExitFailure;
  }
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("atmpc");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("ATMPC_LOG_LEVEL");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

sim::Scenario load_with_overrides(const Options& o, std::optional<std::uint64_t> seed) {
  sim::Scenario scn = scenario::load(o.scenario_path);
  if (o.mode) scn.mode = sim::mode_from_string(*o.mode);
  if (o.steps) scn.steps = *o.steps;
  if (seed && o.random_truth) scn = sim::randomized(scn, *seed);
  else if (seed) scn.seed = *seed;
  sim::validate(scn);
  return scn;
}

double final_norm(const sim::RunLog& log) { return log.summary.final_x.norm(); }

void print_summary(const sim::RunLog& log) {
  const auto& s = log.summary;
  const double j0 = log.records.empty() ? 0.0 : log.records.front().cost;
  const double j1 = log.records.empty() ? 0.0 : log.records.back().cost;
  fmt::print("scenario {} mode {} seed {}: steps {} backups {} final |x| {:.6g} J* {:.6g} -> {:.6g} rms {:.6g} "
             "cumulative cost {:.6g}\n",
             s.scenario, s.mode, s.seed, s.steps, s.backups, final_norm(log), j0, j1, s.rms_x, s.cumulative_cost);
}

int cmd_run(const Options& o) {
  const std::optional<std::uint64_t> seed = o.seeds.empty() ? std::nullopt : std::optional(o.seeds.front());
  const sim::Scenario scn = load_with_overrides(o, seed);
  spdlog::info("running '{}' for {} steps in {} mode", scn.name, scn.steps, sim::to_string(scn.mode));
  const sim::RunLog log = sim::run_closed_loop(scn);
  io::write_run_log(log, o.out_dir);
  io::write_figure_data(log, o.out_dir);
  print_summary(log);
  spdlog::info("artifacts written to {}", o.out_dir);
  return kExitOk;
}

int cmd_export(const Options& o) {
  const std::optional<std::uint64_t> seed = o.seeds.empty() ? std::nullopt : std::optional(o.seeds.front());
  const sim::Scenario scn = load_with_overrides(o, seed);
  const sim::RunLog log = sim::run_closed_loop(scn);
  io::write_figure_data(log, o.out_dir);
  spdlog::info("figure data written to {}", o.out_dir);
  return kExitOk;
}

// Runs job(i) for i in [0, count) on a pool of `workers` threads.
template <typename Job>
void parallel_for(int count, int workers, Job&& job) {
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int w = std::max(1, std::min(workers, count));
  for (int k = 0; k < w; ++k)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

struct BatchOutcome {
  std::optional<sim::RunLog> log;
  std::string error;
  int exit_code = kExitOk;
};

BatchOutcome run_one(const sim::Scenario& scn) {
  BatchOutcome out;
  try {
    out.log = sim::run_closed_loop(scn);
  } catch (const Error& e) {
    out.error = e.what();
    out.exit_code = exit_code_for(e);
  }
  return out;
}

int cmd_batch(const Options& o) {
  if (o.seeds.empty()) fail(ErrorCode::kInvalidScenario, "batch needs --seeds");
  std::vector<sim::Scenario> runs;
  for (auto s : o.seeds) runs.push_back(load_with_overrides(o, s));
  std::vector<BatchOutcome> results(runs.size());
  parallel_for(static_cast<int>(runs.size()), o.workers, [&](int i) { results[i] = run_one(runs[i]); });

  int code = kExitOk;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!results[i].log) {
      fmt::print("seed {}: FAILED {}\n", runs[i].seed, results[i].error);
      code = std::max(code, results[i].exit_code);
      continue;
    }
    const std::string dir = o.out_dir + "/seed_" + std::to_string(runs[i].seed);
    io::write_run_log(*results[i].log, dir);
    print_summary(*results[i].log);
  }
  return code;
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

int cmd_compare(const Options& o) {
  const std::vector<std::uint64_t> seeds = o.seeds.empty() ? std::vector<std::uint64_t>{1} : o.seeds;
  const std::vector<sim::Mode> modes{sim::Mode::kAdaptive, sim::Mode::kFrozen, sim::Mode::kLuenberger};
  std::vector<sim::Scenario> runs;
  for (auto m : modes)
    for (auto s : seeds) {
      sim::Scenario scn = load_with_overrides(o, s);
      scn.mode = m;
      runs.push_back(scn);
    }
  std::vector<BatchOutcome> results(runs.size());
  parallel_for(static_cast<int>(runs.size()), o.workers, [&](int i) { results[i] = run_one(runs[i]); });

  int code = kExitOk;
  for (const auto& r : results) code = std::max(code, r.log ? kExitOk : r.exit_code);
  if (code != kExitOk) {
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (!results[i].log)
        fmt::print("{} seed {}: FAILED {}\n", sim::to_string(runs[i].mode), runs[i].seed, results[i].error);
    return code;
  }

  const int T = runs.front().steps;
  std::vector<std::pair<int, int>> windows;
  for (int a = 0; a < T; a += 10) windows.emplace_back(a, std::min(a + 10, T));
  fmt::print("{:<12}", "mode");
  for (auto [a, b] : windows) fmt::print(" {:>16}", fmt::format("rms[{},{}]", a, b));
  fmt::print(" {:>22}\n", "cumulative cost");
  std::vector<double> mean_cost(modes.size());
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    fmt::print("{:<12}", sim::to_string(modes[mi]));
    for (auto [a, b] : windows) {
      std::vector<double> v;
      for (std::size_t si = 0; si < seeds.size(); ++si) v.push_back(sim::rms(*results[mi * seeds.size() + si].log, a, b));
      const Stats st = stats(v);
      fmt::print(" {:>16}", fmt::format("{:.4g}±{:.2g}", st.mean, st.std));
    }
    std::vector<double> c;
    for (std::size_t si = 0; si < seeds.size(); ++si)
      c.push_back(results[mi * seeds.size() + si].log->summary.cumulative_cost);
    const Stats st = stats(c);
    mean_cost[mi] = st.mean;
    fmt::print(" {:>22}\n", fmt::format("{:.6g}±{:.3g}", st.mean, st.std));
  }
  fmt::print("runs: {}\n", runs.size());
  fmt::print("ordering adaptive <= frozen in cumulative cost: {}\n", mean_cost[0] <= mean_cost[1] ? "yes" : "no");
  const double rel = std::abs(mean_cost[1] - mean_cost[2]) / std::max(1e-12, std::abs(mean_cost[2]));
  fmt::print("frozen vs luenberger cumulative cost relative difference: {:.3g}\n", rel);
  return kExitOk;
}

int cmd_selftest(const Options& o) {
  std::vector<std::string> suites = o.suite.empty() ? selftest::suite_names() : std::vector<std::string>{o.suite};
  bool all = true;
  for (const auto& name : suites) {
    const selftest::SuiteResult r = selftest::run_suite(name);
    fmt::print("{} {} ({} checks, {} failures)\n", r.passed ? "PASS" : "FAIL", r.name, r.checks, r.failures);
    for (const auto& m : r.messages) fmt::print("  {}\n", m);
    all = all && r.passed;
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Output-feedback adaptive tube MPC simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "Output directory");
    sub->add_option("--mode", o.mode, "adaptive | frozen | luenberger");
    sub->add_option("--steps", o.steps, "Override the number of steps")->check(CLI::PositiveNumber);
    sub->add_flag("--random-truth", o.random_truth, "Draw the true parameters and initial state from the priors");
  };

  auto* run = app.add_subcommand("run", "Run one closed-loop simulation");
  add_common(run);
  run->add_option("--seed", o.seeds, "Disturbance seed")->expected(1);

  auto* batch = app.add_subcommand("batch", "Run one simulation per seed");
  add_common(batch);
  batch->add_option("--seeds", o.seeds, "Seeds")->required()->delimiter(',');
  batch->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Compare adaptive, frozen and Luenberger modes");
  add_common(compare);
  compare->add_option("--seeds", o.seeds, "Seeds")->delimiter(',');
  compare->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* exportf = app.add_subcommand("export-figures", "Write per-figure CSV data and a plot spec");
  add_common(exportf);
  exportf->add_option("--seed", o.seeds, "Disturbance seed")->expected(1);

  auto* self = app.add_subcommand("selftest", "Run the built-in property suites");
  self->add_option("--suite", o.suite, "Run only this suite")
      ->check(CLI::IsMember(atmpc::selftest::suite_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run) return cmd_run(o);
    if (*batch) return cmd_batch(o);
    if (*compare) return cmd_compare(o);
    if (*exportf) return cmd_export(o);
    return cmd_selftest(o);
  } catch (const atmpc::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}
