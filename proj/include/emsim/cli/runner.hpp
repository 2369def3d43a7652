#pragma once

#include "emsim/cli/config.hpp"
#include "emsim/scenarios/coloring.hpp"
#include "emsim/scenarios/delay.hpp"
#include "emsim/scenarios/ghs.hpp"
#include "emsim/scenarios/processor.hpp"
#include "emsim/scenarios/writers.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

namespace emsim::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kInvariantViolation = 3,
  kCanaryExpired = 4,
};

struct RunResult {
  int exit_code = kOk;
  std::string summary;  // human-readable result
  std::string report;   // message report, rendered
  std::string log;      // JSON lines
};

namespace detail {

inline scenarios::RunOptions run_options(const ScenarioConfig& c, std::size_t processes) {
  scenarios::RunOptions o;
  o.topology = c.topology(processes);
  o.seed = c.seed;
  o.canary = c.canary;
  return o;
}

inline void finish(RunResult& r, const scenarios::World& w) {
  r.report = render_report(w.report());
  std::ostringstream log;
  w.sim->log().write_jsonl(log);
  r.log = log.str();
  if (!w.net->conserved()) {
    r.summary += "invariant violated: message conservation\n";
    r.exit_code = kInvariantViolation;
  }
}

inline void fail(RunResult& r, int code, const std::string& why) {
  r.summary += (code == kCanaryExpired ? "canary expired: " : "invariant violated: ") + why + "\n";
  if (r.exit_code == kOk || code == kInvariantViolation) r.exit_code = code;
}

inline RunResult run_ghs(const ScenarioConfig& c) {
  const std::size_t n = c.nodes.value_or(10);
  const std::size_t e = c.edges.value_or(std::min<std::size_t>(n < 2 ? 0 : std::max(n - 1, 17 * n / 10),
                                                               scenarios::max_edges(n)));
  Rng graph_rng(c.seed);
  const auto graph = scenarios::random_connected_graph(n, e, graph_rng);
  auto run = scenarios::run_ghs(graph, run_options(c, n));
  RunResult r;
  std::ostringstream s;
  s << "ghs-mst: " << n << " nodes, " << graph.edges.size() << " edges, seed " << c.seed << "\n";
  auto tree = run.branch_edges();
  std::int64_t weight = 0;
  for (const auto& t : tree) {
    s << "  branch " << t.u << "-" << t.v << " w=" << t.weight << "\n";
    weight += t.weight;
  }
  const auto msgs = run.application_messages();
  s << "tree weight " << weight << ", halted at t=" << run.world.sim->horizon().display() << "\n";
  s << "messages " << msgs << " <= bound " << std::fixed << std::setprecision(2) << run.bound() << "\n";
  r.summary = s.str();
  if (run.violation) fail(r, kInvariantViolation, *run.violation);
  if (!run.terminated()) fail(r, kCanaryExpired, "no node halted");
  if (run.terminated()) {
    scenarios::Graph t{n, tree};
    if (tree.size() != n - 1 || !t.connected()) fail(r, kInvariantViolation, "branch edges are not a spanning tree");
    if (static_cast<double>(msgs) > run.bound()) fail(r, kInvariantViolation, "message bound exceeded");
  }
  finish(r, run.world);
  return r;
}

inline RunResult run_coloring(const ScenarioConfig& c) {
  const std::size_t n = c.nodes.value_or(10);
  auto run = scenarios::run_coloring(scenarios::line_graph(n), run_options(c, n));
  RunResult r;
  std::ostringstream s;
  s << "coloring: line of " << n << ", seed " << c.seed << ", "
    << (run.terminated ? "terminated" : "still running") << " at t=" << run.finished_at.display() << "\n  colors";
  for (int col : run.colors()) s << ' ' << col;
  s << "\n";
  r.summary = s.str();
  if (!run.terminated) fail(r, kCanaryExpired, "not every node stopped");
  else if (!run.proper()) fail(r, kInvariantViolation, "adjacent nodes share a color");
  finish(r, run.world);
  return r;
}

inline RunResult run_writers(const ScenarioConfig& c) {
  auto payloads = scenarios::make_payloads(c.writers, c.payload);
  auto run = scenarios::run_writers_reader(payloads, run_options(c, c.writers + 1));
  RunResult r;
  std::ostringstream s;
  s << "writers-reader: " << c.writers << " writers x " << c.payload << " parts, seed " << c.seed << "\n  received";
  for (const auto& piece : run.reader->receive_list) s << ' ' << piece;
  s << "\n";
  r.summary = s.str();
  if (!run.terminated) fail(r, kCanaryExpired, "writers did not finish");
  if (!run.mutually_exclusive() && run.terminated) fail(r, kInvariantViolation, "payloads interleaved");
  finish(r, run.world);
  return r;
}

inline RunResult run_factorial(const ScenarioConfig& c) {
  if (c.n < 0 || c.n > 20) throw ConfigError("factorial n must be in 0..20");
  std::vector<std::int64_t> ns;
  for (std::int64_t i = 0; i <= c.n; ++i) ns.push_back(i);
  auto run = scenarios::run_factorial(ns, run_options(c, 2));
  RunResult r;
  std::ostringstream s;
  std::int64_t expect = 1;
  bool right = run.results.size() == ns.size();
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const auto [k, v] = run.results[i];
    if (k > 0) expect *= k;
    s << "  " << k << "! = " << v << "\n";
    right = right && k == static_cast<std::int64_t>(i) && v == expect;
  }
  r.summary = "factorial: 0.." + std::to_string(c.n) + "\n" + s.str();
  if (!run.finished) fail(r, kCanaryExpired, "client did not finish");
  else if (!right) fail(r, kInvariantViolation, "wrong factorial");
  if (!scenarios::server_stack_restored(run)) fail(r, kInvariantViolation, "server data stack changed");
  finish(r, run.world);
  return r;
}

inline RunResult run_delay(const ScenarioConfig& c) {
  const Time until = c.canary.value_or(Time(2));
  auto run = scenarios::run_delay(c.seed, until);
  RunResult r;
  r.summary = run.render();
  Time expect(0);
  for (const auto& f : run.firings) {
    if (f.at > until) fail(r, kInvariantViolation, "event past the canary");
    if (f.callback != 'f') continue;
    if (f.at != expect) fail(r, kInvariantViolation, "f fired at " + f.at.display());
    expect = expect + Time(1);
  }
  r.report = render_report({});
  return r;
}

}  // namespace detail

/// Runs one configured scenario. Configuration problems are reported as
/// exit code 2 instead of propagating.
inline RunResult run_scenario(const ScenarioConfig& c) {
  try {
    switch (c.scenario) {
      case Scenario::GhsMst: return detail::run_ghs(c);
      case Scenario::Coloring: return detail::run_coloring(c);
      case Scenario::WritersReader: return detail::run_writers(c);
      case Scenario::Factorial: return detail::run_factorial(c);
      case Scenario::Fig1Delay: return detail::run_delay(c);
    }
  } catch (const ConfigError& e) {
    return RunResult{kConfigError, std::string("config error: ") + e.what() + "\n", {}, {}};
  } catch (const ScenarioError& e) {
    return RunResult{kConfigError, std::string("scenario error: ") + e.what() + "\n", {}, {}};
  } catch (const std::invalid_argument& e) {
    return RunResult{kConfigError, std::string("config error: ") + e.what() + "\n", {}, {}};
  }
  return RunResult{kConfigError, "config error: unhandled scenario\n", {}, {}};
}

/// Writes the log and report files named in the config.
inline void write_outputs(const ScenarioConfig& c, const RunResult& r) {
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
  };
  if (c.log_out) write(*c.log_out, r.log);
  if (c.report_out) write(*c.report_out, r.report);
}

}  // namespace emsim::cli
