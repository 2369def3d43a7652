#pragma once

// Whole-system checks shared by the acceptance binary and the property
// tests. Each returns a Verdict carrying a short explanation.

#include "emsim/kernel/bucket_queue.hpp"
#include "emsim/scenarios/coloring.hpp"
#include "emsim/scenarios/delay.hpp"
#include "emsim/scenarios/ghs.hpp"
#include "emsim/scenarios/processor.hpp"
#include "emsim/scenarios/writers.hpp"
#include "oracles/factorial.hpp"
#include "oracles/kruskal.hpp"
#include "oracles/naive_queue.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace checks {

using namespace emsim;

struct Verdict {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// ---- delay callbacks -------------------------------------------------------

inline Verdict delay_fires_on_integers(int seeds = 20) {
  Verdict v;
  for (int s = 0; s < seeds && v.ok; ++s) {
    auto run = scenarios::run_delay(static_cast<std::uint64_t>(s), Time(2));
    std::vector<std::string> f;
    for (const auto& x : run.firings) {
      if (x.at > Time(2)) v.fail("seed " + std::to_string(s) + ": event at " + x.at.display() + " past the canary");
      if (x.callback == 'f') f.push_back(x.at.str());
    }
    if (f != std::vector<std::string>{"0/1", "1/1", "2/1"}) {
      std::string got;
      for (const auto& t : f) got += " " + t;
      v.fail("seed " + std::to_string(s) + ": f fired at" + got);
    }
  }
  if (v.ok) v.detail = std::to_string(seeds) + " seeds, f at exactly 0, 1, 2";
  return v;
}

// ---- GHS --------------------------------------------------------------------

struct GhsSweep {
  Verdict mst;
  Verdict bound;
  std::size_t graphs = 0;
  double worst_ratio = 0;
};

inline std::vector<oracle::Edge> oracle_edges(const scenarios::Graph& g) {
  std::vector<oracle::Edge> out;
  for (const auto& e : g.edges) out.push_back({e.u, e.v, e.weight});
  return out;
}

/// Random connected graphs with N spread over [2, 32] and E between N-1
/// and min(3N, N(N-1)/2).
inline GhsSweep ghs_sweep(std::size_t graphs, std::uint64_t seed) {
  GhsSweep s;
  Rng rng(seed);
  for (std::size_t i = 0; i < graphs; ++i) {
    const std::size_t n = 2 + i % 31;
    const std::size_t lo = n - 1;
    const std::size_t hi = std::min(3 * n, scenarios::max_edges(n));
    const std::size_t m = lo + scenarios::uniform_below(rng, hi - lo + 1);
    const auto g = scenarios::random_connected_graph(n, m, rng);
    scenarios::RunOptions o;
    o.seed = rng();
    auto run = scenarios::run_ghs(g, o);
    ++s.graphs;
    const std::string tag = "graph " + std::to_string(i) + " (N=" + std::to_string(n) + ", E=" + std::to_string(m) + ")";
    if (run.violation) {
      s.mst.fail(tag + ": " + *run.violation);
      continue;
    }
    if (run.halted != 1) {
      s.mst.fail(tag + ": " + std::to_string(run.halted) + " nodes halted");
      continue;
    }
    if (scenarios::edge_pairs(run.branch_edges()) != oracle::kruskal(n, oracle_edges(g)))
      s.mst.fail(tag + ": BRANCH edges differ from Kruskal");
    const auto msgs = run.application_messages();
    if (static_cast<double>(msgs) > run.bound())
      s.bound.fail(tag + ": " + std::to_string(msgs) + " messages > bound " + std::to_string(run.bound()));
    s.worst_ratio = std::max(s.worst_ratio, static_cast<double>(msgs) / run.bound());
  }
  if (s.mst.ok) s.mst.detail = std::to_string(s.graphs) + " graphs, BRANCH set == Kruskal MST in all";
  if (s.bound.ok) {
    std::ostringstream d;
    d.precision(3);
    d << std::to_string(s.graphs) << " graphs within 5N log2 N + 2E, worst ratio " << s.worst_ratio;
    s.bound.detail = d.str();
  }
  return s;
}

// ---- factorial RPC --------------------------------------------------------

inline Verdict factorial_rpc(std::int64_t up_to = 10) {
  Verdict v;
  std::vector<std::int64_t> ns;
  for (std::int64_t n = 0; n <= up_to; ++n) ns.push_back(n);
  auto run = scenarios::run_factorial(ns);
  if (!run.finished) v.fail("client did not finish");
  if (run.results.size() != ns.size()) v.fail(std::to_string(run.results.size()) + " results");
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const auto [n, got] = run.results[i];
    if (n != ns[i] || got != oracle::factorial(n))
      v.fail(std::to_string(n) + "! gave " + std::to_string(got) + ", expected " + std::to_string(oracle::factorial(n)));
  }
  if (!scenarios::server_stack_restored(run)) v.fail("server data stack not restored");
  // Every request went out on its own reply inbox, came back as an
  // RpcDone through a blocking receive and its inbox was closed.
  const auto& closed = run.client->closed_reply_inboxes();
  if (closed.size() != ns.size()) v.fail(std::to_string(closed.size()) + " reply inboxes closed");
  for (const auto& a : closed)
    if (run.world.net->courier(a.courier).is_open(a)) v.fail("reply inbox " + to_string(a) + " still open");
  const auto r = run.world.report();
  if (r.count(std::string(scenarios::MsgFactorial::kType)) != ns.size() || r.count(std::string(RpcDone::kType)) != ns.size())
    v.fail("request/response counts do not match");
  if (v.ok) v.detail = "0!.." + std::to_string(up_to) + "! exact, " + std::to_string(closed.size()) + " reply inboxes opened and closed";
  return v;
}

// ---- mutual exclusion --------------------------------------------------------

inline Verdict writers_exclusive(int seeds = 20) {
  Verdict v;
  int runs = 0;
  for (std::size_t w : {2u, 3u, 5u})
    for (std::size_t k : {1u, 3u, 10u})
      for (int s = 0; s < seeds; ++s) {
        scenarios::RunOptions o;
        o.seed = static_cast<std::uint64_t>(s);
        auto run = scenarios::run_writers_reader(scenarios::make_payloads(w, k), o);
        ++runs;
        const std::string tag = "W=" + std::to_string(w) + " k=" + std::to_string(k) + " seed " + std::to_string(s);
        if (!run.terminated) v.fail(tag + ": did not finish");
        else if (!run.mutually_exclusive()) v.fail(tag + ": payloads interleaved");
      }
  if (v.ok) v.detail = std::to_string(runs) + " runs, zero interleavings";
  return v;
}

// ---- 3-coloring ----------------------------------------------------------------

struct ColoringSweep {
  Verdict ok;
  std::map<std::size_t, int> terminated;  // N -> runs that finished
  int runs_per_n = 0;
};

inline ColoringSweep coloring_sweep(int runs = 100) {
  ColoringSweep s;
  s.runs_per_n = runs;
  for (std::size_t n : {2u, 10u, 50u}) {
    for (int seed = 0; seed < runs; ++seed) {
      scenarios::RunOptions o;
      o.seed = static_cast<std::uint64_t>(seed);
      auto run = scenarios::run_coloring(scenarios::line_graph(n), o);
      if (!run.terminated) continue;
      ++s.terminated[n];
      if (!run.proper())
        s.ok.fail("N=" + std::to_string(n) + " seed " + std::to_string(seed) + ": improper coloring");
    }
  }
  if (s.terminated[50] * 100 < 95 * runs)
    s.ok.fail("only " + std::to_string(s.terminated[50]) + "/" + std::to_string(runs) + " runs at N=50 finished within 10N");
  if (s.ok.ok) {
    std::ostringstream d;
    d << "all terminated runs proper; finished within 10N: N=2 " << s.terminated[2] << "/" << runs << ", N=10 "
      << s.terminated[10] << "/" << runs << ", N=50 " << s.terminated[50] << "/" << runs;
    s.ok.detail = d.str();
  }
  return s;
}

// ---- delivery --------------------------------------------------------------------

struct MsgNumbered : MessageOf<MsgNumbered, "MSG-NUMBERED"> {
  std::size_t sender = 0;
  std::size_t seq = 0;
};

struct DeliveryResult {
  Verdict fifo;
  Verdict returns;
  Verdict conservation;
};

/// Sends `count` sequence-numbered messages between random (sender, inbox)
/// pairs at random times over a randomly configured network, drains it to
/// exhaustion and checks order, bounces and accounting.
inline DeliveryResult delivery_property(std::uint64_t seed, std::size_t count = 1000) {
  DeliveryResult out;
  std::mt19937_64 rng(seed);
  CourierSettings base;
  base.sleep_when_idle = true;
  TopologySpec spec = seed % 2 ? TopologySpec::grid(3, 3, base) : TopologySpec::all_to_all(5, base);
  std::vector<CourierId> ids;
  if (spec.kind == TopologySpec::Kind::Grid) {
    for (std::int64_t y = 0; y < spec.height; ++y)
      for (std::int64_t x = 0; x < spec.width; ++x) ids.push_back(GridCoord{x, y});
  } else {
    for (std::uint64_t i = 0; i < spec.count; ++i) ids.push_back(i);
  }
  const Time rates[] = {Time(1), Time(2), Time(1, 2), Time(2, 3)};
  const std::optional<std::size_t> widths[] = {std::nullopt, std::size_t{1}, std::size_t{2}};
  for (const auto& id : ids) {
    auto& o = spec.overrides[id];
    o.rate = rates[rng() % 4];
    o.bandwidth = widths[rng() % 3];
  }
  Simulation run_sim(seed);
  Network net(run_sim, spec);
  const std::size_t couriers = net.courier_count();

  // Two live inboxes per courier, plus one that is closed before anything
  // is sent so that every message to it is a send to a closed inbox.
  std::vector<Address> inboxes;
  std::vector<bool> dead;
  for (std::size_t i = 0; i < couriers; ++i) {
    CourierBinding b(net.courier_at(i));
    for (int k = 0; k < 3; ++k) {
      inboxes.push_back(register_inbox());
      dead.push_back(k == 2);
    }
    unregister_inbox(inboxes.back());
  }
  // Reply inboxes for senders; never closed.
  std::vector<Address> reply_boxes;
  for (std::size_t i = 0; i < couriers; ++i) {
    CourierBinding b(net.courier_at(i));
    reply_boxes.push_back(register_inbox());
  }

  const std::size_t senders = 2 * couriers;  // sender s lives on courier s % couriers
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> next_seq;
  std::size_t sends_to_closed_with_reply = 0;
  std::size_t sends_to_closed_bare = 0;

  Time t(0);
  for (std::size_t i = 0; i < count; ++i) {
    t = t + Time(static_cast<std::int64_t>(rng() % 3), 4);
    const std::size_t sender = rng() % senders;
    const std::size_t target = rng() % inboxes.size();
    const bool with_reply = rng() % 2 == 0;
    if (dead[target]) ++(with_reply ? sends_to_closed_with_reply : sends_to_closed_bare);
    run_sim.add_event(make_event(
        [&, sender, target, with_reply](const Time&) {
          const std::size_t home = sender % couriers;
          CourierBinding b(net.courier_at(home));
          auto m = std::make_shared<MsgNumbered>();
          m->sender = sender;
          m->seq = next_seq[{sender, target}]++;
          if (with_reply) m->reply_channel = reply_boxes[home];
          send_message(inboxes[target], m);
          return EventList{};
        },
        t));
  }

  bool conserved_throughout = true;
  run_sim.set_observer([&](const Event&) { conserved_throughout = conserved_throughout && net.conserved(); });
  const auto outcome = run_sim.run();

  // Drain and check per-pair order.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> expect;
  std::size_t delivered = 0;
  for (std::size_t target = 0; target < inboxes.size(); ++target) {
    const Address& a = inboxes[target];
    if (dead[target]) continue;
    while (receive_message(net, a, {on<MsgNumbered>([&](const MsgNumbered& m) {
                             auto& e = expect[{m.sender, target}];
                             if (m.seq < e)
                               out.fifo.fail("sender " + std::to_string(m.sender) + " -> inbox " + std::to_string(target) +
                                             ": seq " + std::to_string(m.seq) + " after " + std::to_string(e));
                             e = m.seq + 1;
                             ++delivered;
                           })})) {
    }
  }
  // Nothing sent to a live inbox may go missing.
  for (std::size_t target = 0; target < inboxes.size(); ++target) {
    if (dead[target]) continue;
    for (std::size_t s = 0; s < senders; ++s) {
      auto it = next_seq.find({s, target});
      if (it == next_seq.end()) continue;
      if (expect[{s, target}] != it->second)
        out.fifo.fail("pair " + std::to_string(s) + "->" + std::to_string(target) + " lost messages");
    }
  }

  std::size_t bounced = 0;
  for (const auto& r : reply_boxes)
    while (receive_message(net, r, {on<ReturnToSender>([&](const ReturnToSender&) { ++bounced; })})) {
    }
  const auto& st = net.stats();
  if (bounced != sends_to_closed_with_reply || st.returned != sends_to_closed_with_reply)
    out.returns.fail(std::to_string(sends_to_closed_with_reply) + " sends to closed inboxes with reply channel, " +
                     std::to_string(bounced) + " returns received");
  if (st.dropped != sends_to_closed_bare)
    out.returns.fail(std::to_string(sends_to_closed_bare) + " bare sends to closed inboxes, " + std::to_string(st.dropped) + " dropped");

  if (outcome != RunOutcome::Exhausted) out.conservation.fail("run did not reach exhaustion");
  if (!conserved_throughout) out.conservation.fail("accounting broke during the run");
  if (!net.conserved() || net.in_flight() != 0) out.conservation.fail("accounting broken at exhaustion");

  out.fifo.detail = std::to_string(count) + " messages, " + std::to_string(delivered) + " delivered in order";
  out.returns.detail = std::to_string(sends_to_closed_with_reply) + " bounced exactly once, " +
                       std::to_string(sends_to_closed_bare) + " dropped";
  out.conservation.detail = "sent " + std::to_string(st.sent) + " = consumed " + std::to_string(st.consumed) +
                            " + returned " + std::to_string(st.returned) + " + dropped " + std::to_string(st.dropped) +
                            " + discarded " + std::to_string(st.discarded);
  return out;
}

// ---- queue equivalence -----------------------------------------------------------

/// Interleaved pushes and pops over at most 8 distinct keys. The recorded
/// pop transcripts must be identical.
inline Verdict queue_equivalence(std::uint64_t seed, std::size_t ops = 10000) {
  Verdict v;
  std::mt19937_64 rng(seed);
  BucketQueue<Time, std::size_t> fast;
  oracle::StableNaiveQueue<Time, std::size_t> slow;
  std::vector<std::string> a, b;
  std::size_t id = 0;
  const std::size_t keys = 1 + rng() % 8;
  for (std::size_t i = 0; i < ops; ++i) {
    if (slow.empty() || rng() % 5 < 3) {
      Time k(static_cast<std::int64_t>(rng() % keys), 3);
      fast.push(k, id);
      slow.push(k, id);
      ++id;
    } else {
      auto x = fast.pop();
      auto y = slow.pop();
      a.push_back(x.first.str() + ":" + std::to_string(x.second));
      b.push_back(y.first.str() + ":" + std::to_string(y.second));
    }
  }
  while (!slow.empty()) {
    auto x = fast.pop();
    auto y = slow.pop();
    a.push_back(x.first.str() + ":" + std::to_string(x.second));
    b.push_back(y.first.str() + ":" + std::to_string(y.second));
  }
  if (!fast.empty()) v.fail("bucket queue kept items the naive queue did not");
  if (a != b) {
    std::size_t i = 0;
    while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
    v.fail("transcripts diverge at pop " + std::to_string(i));
  }
  if (v.ok) v.detail = std::to_string(ops) + " ops, " + std::to_string(keys) + " keys, " + std::to_string(a.size()) + " identical pops";
  return v;
}

// ---- determinism ---------------------------------------------------------------------

struct Fingerprint {
  std::string log;
  std::uint64_t transcript = 0;
  std::uint64_t events = 0;
};

inline Fingerprint fingerprint(const scenarios::World& w) {
  std::ostringstream os;
  w.sim->log().write_jsonl(os);
  return {os.str(), w.transcript->hash(), w.transcript->events()};
}

/// Runs the named scenario once under `o` and fingerprints it.
inline Fingerprint run_named(const std::string& which, scenarios::RunOptions o) {
  using namespace scenarios;
  if (which == "ghs") {
    Rng g(o.seed);
    return fingerprint(run_ghs(random_connected_graph(12, 20, g), o).world);
  }
  if (which == "coloring") return fingerprint(run_coloring(line_graph(12), o).world);
  if (which == "writers") return fingerprint(run_writers_reader(make_payloads(3, 3), o).world);
  return fingerprint(run_factorial({0, 3, 6, 9}, o).world);
}

inline Verdict determinism() {
  Verdict v;
  std::size_t compared = 0;
  for (const std::string which : {"ghs", "coloring", "writers", "factorial"})
    for (std::uint64_t seed : {1u, 7u, 1234u})
      for (bool shuffle : {false, true}) {
        scenarios::RunOptions o;
        o.seed = seed;
        o.shuffle_ties = shuffle;
        const auto a = run_named(which, o);
        const auto b = run_named(which, o);
        const std::string tag = which + " seed " + std::to_string(seed) + (shuffle ? " shuffled" : "");
        if (a.log.empty()) v.fail(tag + ": empty log");
        if (a.log != b.log) v.fail(tag + ": logs differ");
        if (a.transcript != b.transcript) v.fail(tag + ": transcripts differ");

        scenarios::RunOptions bare = o;
        bare.instruments = {false, false, false};
        scenarios::RunOptions full = o;
        full.instruments = {true, true, true};
        const auto c = run_named(which, bare);
        const auto d = run_named(which, full);
        if (c.transcript != d.transcript || c.events != d.events || c.transcript != a.transcript)
          v.fail(tag + ": instrumentation changed the transcript");
        if (!c.log.empty()) v.fail(tag + ": bare run still logged");
        ++compared;
      }
  if (v.ok) v.detail = std::to_string(compared) + " configurations: identical JSONL, equal transcript hashes bare vs instrumented";
  return v;
}

}  // namespace checks
