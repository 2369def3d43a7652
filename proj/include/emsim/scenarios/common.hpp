#pragma once

#include "emsim/actor/process.hpp"
#include "emsim/instrumentation/report.hpp"
#include "emsim/instrumentation/transcript.hpp"
#include "emsim/kernel/simulation.hpp"
#include "emsim/network/network.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace emsim::scenarios {

struct Instrumentation {
  bool log = true;
  bool trace = false;
  bool dereference = false;
};

/// Knobs shared by every scenario.
struct RunOptions {
  std::optional<TopologySpec> topology;  // scenario default when unset
  std::uint64_t seed = 0;
  std::optional<Time> canary;            // scenario default when unset
  Instrumentation instruments;
  bool shuffle_ties = false;             // seeded tie-breaking among same-time events
  bool keep_transcript = false;
};

/// A simulation, its network and a transcript recorder.
struct World {
  std::unique_ptr<Simulation> sim;
  std::unique_ptr<Network> net;
  std::unique_ptr<Transcript> transcript;

  World(const RunOptions& options, TopologySpec fallback)
      : sim(std::make_unique<Simulation>(options.seed)),
        transcript(std::make_unique<Transcript>(options.keep_transcript)) {
    sim->log().set_enabled(options.instruments.log);
    if (options.shuffle_ties) sim->set_tie_break_hook(shuffled_tie_break());
    transcript->attach(*sim);
    net = std::make_unique<Network>(*sim, options.topology.value_or(std::move(fallback)));
    net->tracer().set_enabled(options.instruments.trace);
    net->registry().set_enabled(options.instruments.dereference);
  }

  /// Courier hosting the i-th process: round-robin over couriers in
  /// creation order, so on a WxH grid process i sits at (i%W, (i/W)%H).
  Courier& place(std::size_t i) const { return net->courier_at(i % net->courier_count()); }

  MessageReport report(ReportOptions o = {}) const { return message_report(sim->log(), o); }
};

}  // namespace emsim::scenarios
