#pragma once

#include "emsim/actor/sync.hpp"
#include "emsim/scenarios/common.hpp"
#include "emsim/scenarios/graph.hpp"
#include "emsim/stdlib/rpc.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

namespace emsim::scenarios {

struct MsgColorQuery : MessageOf<MsgColorQuery, "MESSAGE-COLOR-QUERY"> {};

/// Randomized 3-coloring using only neighbor queries. Each round a node
/// picks a random color, asks its neighbors for theirs, and stops once no
/// neighbor reports the same color.
class ColoringProcess final : public Process {
 public:
  ColoringProcess(KindPtr kind, std::vector<Address> neighbors) : Process(std::move(kind)), neighbors_(std::move(neighbors)) {}

  bool stopped() const noexcept { return stopped_; }
  int color() const noexcept { return color_; }
  const std::vector<Address>& neighbors() const noexcept { return neighbors_; }
  std::vector<Address>& neighbors() noexcept { return neighbors_; }
  std::uint64_t rounds() const noexcept { return rounds_; }

 private:
  friend KindPtr make_coloring_kind();
  bool stopped_ = false;
  int color_ = 0;
  std::vector<Address> neighbors_;
  std::uint64_t rounds_ = 0;
};

inline KindPtr make_coloring_kind() {
  auto kind = std::make_shared<ProcessKind>("PROCESS-COLORING");
  define_rpc_handler<ColoringProcess, MsgColorQuery>(
      *kind, "handle-message-color-query", [](ColoringProcess& p, const MsgColorQuery&, const Time&) { return p.color_; });
  kind->define_dispatch({serve<MsgColorQuery>("handle-message-color-query")});
  kind->command<ColoringProcess>("START", [](ColoringProcess& p, const Command&, const Time&) {
    p.continuation({cmd("QUERY")});
  });
  kind->command<ColoringProcess>("QUERY", [](ColoringProcess& p, const Command&, const Time&) {
    if (p.stopped_) {
      p.continuation({cmd("IDLE")});
      return;
    }
    p.continuation({cmd("QUERY")});
    ++p.rounds_;
    p.color_ = static_cast<int>(uniform_below(p.simulation().rng(), 3));
    auto listeners = send_message_batch([] { return std::make_shared<MsgColorQuery>(); }, p.neighbors_);
    with_replies(p, std::move(listeners), [](Process& base, const Replies& replies) {
      auto& self = process_cast<ColoringProcess>(base);
      self.stopped_ = std::none_of(replies.begin(), replies.end(),
                                   [&](const Reply& r) { return reply_as<int>(r) == self.color_; });
    });
  });
  kind->command<ColoringProcess>("IDLE", [](ColoringProcess& p, const Command&, const Time&) {
    p.continuation({cmd("IDLE")});
  });
  return kind;
}

struct ColoringRun {
  World world;
  std::vector<std::shared_ptr<ColoringProcess>> nodes;
  Graph graph;
  RunOutcome outcome = RunOutcome::Exhausted;
  bool terminated = false;
  Time finished_at{0};

  std::vector<int> colors() const {
    std::vector<int> out;
    for (const auto& n : nodes) out.push_back(n->color());
    return out;
  }

  /// Adjacent nodes never share a color.
  bool proper() const {
    for (const auto& e : graph.edges)
      if (nodes[e.u]->color() == nodes[e.v]->color()) return false;
    return true;
  }
};

/// Colors an arbitrary graph (the classic instance is a line). Stops when
/// every node has stopped or at the canary, which defaults to 10 * n.
inline ColoringRun run_coloring(const Graph& graph, RunOptions options = {}) {
  if (graph.nodes < 2) throw ScenarioError("coloring needs at least 2 nodes");
  ColoringRun run{World(options, TopologySpec::all_to_all(graph.nodes)), {}, graph, RunOutcome::Exhausted, false, Time(0)};
  auto kind = make_coloring_kind();
  for (std::size_t i = 0; i < graph.nodes; ++i)
    run.nodes.push_back(spawn<ColoringProcess>(run.world.place(i), {}, kind, std::vector<Address>{}));
  for (const auto& e : graph.edges) {
    run.nodes[e.u]->neighbors().push_back(run.nodes[e.v]->public_address());
    run.nodes[e.v]->neighbors().push_back(run.nodes[e.u]->public_address());
  }
  const Time canary = options.canary.value_or(Time(static_cast<std::int64_t>(10 * graph.nodes)));
  auto nodes = run.nodes;
  auto all_stopped = [nodes] {
    return std::all_of(nodes.begin(), nodes.end(), [](const auto& n) { return n->stopped(); });
  };
  run.outcome = run.world.sim->run(canary_any(canary_when(all_stopped), canary_until(canary)));
  run.terminated = all_stopped();
  run.finished_at = run.world.sim->horizon();
  return run;
}

}  // namespace emsim::scenarios
