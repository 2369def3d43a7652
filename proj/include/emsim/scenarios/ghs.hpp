#pragma once

#include "emsim/scenarios/common.hpp"
#include "emsim/scenarios/graph.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace emsim::scenarios {

// Distributed minimum spanning tree after Gallager, Humblet and Spira. The
// commands and handlers below follow their pseudocode step for step.

enum class NodeState { Sleeping, Find, Found };
enum class EdgeState { Basic, Branch, Rejected };

inline const char* to_string(NodeState s) {
  switch (s) {
    case NodeState::Sleeping: return "SLEEPING";
    case NodeState::Find: return "FIND";
    case NodeState::Found: return "FOUND";
  }
  return "?";
}

inline const char* to_string(EdgeState s) {
  switch (s) {
    case EdgeState::Basic: return "BASIC";
    case EdgeState::Branch: return "BRANCH";
    case EdgeState::Rejected: return "REJECTED";
  }
  return "?";
}

using Weight = std::int64_t;

/// "No outgoing edge." Real weights must stay strictly below it.
inline constexpr Weight kInfinity = std::numeric_limits<Weight>::max();

/// Fields common to every GHS message: the sender's address names the edge.
struct GhsFields {
  virtual ~GhsFields() = default;
  Address edge;
};

struct MsgConnect : MessageOf<MsgConnect, "MSG-CONNECT">, GhsFields {
  std::int64_t level = 0;
};
struct MsgInitiate : MessageOf<MsgInitiate, "MSG-INITIATE">, GhsFields {
  std::int64_t level = 0;
  NodeState state = NodeState::Find;
  Weight weight = 0;
};
struct MsgTest : MessageOf<MsgTest, "MSG-TEST">, GhsFields {
  std::int64_t level = 0;
  Weight weight = 0;
};
struct MsgAccept : MessageOf<MsgAccept, "MSG-ACCEPT">, GhsFields {};
struct MsgReject : MessageOf<MsgReject, "MSG-REJECT">, GhsFields {};
struct MsgReport : MessageOf<MsgReport, "MSG-REPORT">, GhsFields {
  Weight weight = 0;
};
struct MsgChangeRoot : MessageOf<MsgChangeRoot, "MSG-CHANGE-ROOT">, GhsFields {};

inline const std::vector<std::string>& ghs_message_types() {
  static const std::vector<std::string> types{
      std::string(MsgConnect::kType), std::string(MsgInitiate::kType), std::string(MsgTest::kType),
      std::string(MsgAccept::kType),  std::string(MsgReject::kType),   std::string(MsgReport::kType),
      std::string(MsgChangeRoot::kType)};
  return types;
}

struct Edge {
  EdgeState state = EdgeState::Basic;
  Weight weight = 0;
};

class FragmentNode final : public Process {
 public:
  FragmentNode(KindPtr kind, std::size_t index) : Process(std::move(kind)), index_(index) {}

  std::size_t index() const noexcept { return index_; }
  NodeState node_state() const noexcept { return state_; }
  std::int64_t level() const noexcept { return level_; }
  Weight fragment_weight() const noexcept { return fragment_weight_; }
  std::int64_t find_count() const noexcept { return find_count_; }
  bool halted() const noexcept { return halted_; }
  const std::map<Address, Edge>& adjacent_edges() const noexcept { return edges_; }

  void add_edge(const Address& neighbor, Weight w) {
    if (w >= kInfinity) throw ScenarioError("edge weight collides with the infinity sentinel");
    edges_[neighbor] = Edge{EdgeState::Basic, w};
  }

  // -- state transitions, checked -------------------------------------------

  Edge& edge(const Address& a) {
    auto it = edges_.find(a);
    if (it == edges_.end()) throw ProtocolError(name() + " has no edge to " + to_string(a));
    return it->second;
  }

  /// Edges only leave BASIC, and only once.
  void set_edge_state(const Address& a, EdgeState next) {
    Edge& e = edge(a);
    if (e.state == next) return;
    if (e.state != EdgeState::Basic)
      throw InvariantViolation(name() + ": edge to " + to_string(a) + " moved " + to_string(e.state) + " -> " +
                               to_string(next));
    e.state = next;
  }

  void set_level(std::int64_t next) {
    if (next < level_)
      throw InvariantViolation(name() + ": fragment level fell from " + std::to_string(level_) + " to " +
                               std::to_string(next));
    level_ = next;
  }

  /// Lightest edge, optionally restricted to one state.
  std::optional<Address> minimum_weight_edge(std::optional<EdgeState> desired = std::nullopt) const {
    std::optional<Address> best;
    Weight w = kInfinity;
    for (const auto& [addr, e] : edges_)
      if ((!desired || e.state == *desired) && e.weight < w) {
        w = e.weight;
        best = addr;
      }
    return best;
  }

  std::vector<Address> edges_in_state(EdgeState desired, const Address& except) const {
    std::vector<Address> out;
    for (const auto& [addr, e] : edges_)
      if (e.state == desired && addr != except) out.push_back(addr);
    return out;
  }

  // Marks the lightest edge BRANCH and asks to connect over it.
  void wakeup() {
    if (state_ != NodeState::Sleeping) return;
    auto m = minimum_weight_edge();
    if (!m) throw ScenarioError(name() + " has no edges; GHS needs a connected graph of at least 2 nodes");
    set_edge_state(*m, EdgeState::Branch);
    find_count_ = 0;
    set_level(0);
    state_ = NodeState::Found;
    log(EntryKind::User, {{"event", "wakeup"}});
    auto connect = std::make_shared<MsgConnect>();
    connect->edge = public_address();
    connect->level = 0;
    send_message(*m, std::move(connect));
  }

  void requeue(const MessagePtr& m) { send_message(public_address(), m); }

 private:
  friend KindPtr make_fragment_node_kind();

  std::size_t index_;
  NodeState state_ = NodeState::Sleeping;
  std::map<Address, Edge> edges_;
  std::int64_t level_ = 0;
  Weight fragment_weight_ = 0;
  std::int64_t find_count_ = 0;
  std::optional<Address> best_edge_;
  Weight best_weight_ = kInfinity;
  std::optional<Address> test_edge_;
  std::optional<Address> in_branch_;
  bool halted_ = false;
};

inline KindPtr make_fragment_node_kind() {
  using P = FragmentNode;
  auto kind = std::make_shared<ProcessKind>("FRAGMENT-NODE");

  // Loops forever; wakes the node on its first pass.
  kind->command<P>("START", [](P& node, const Command&, const Time&) {
    node.continuation({cmd("START")});
    if (node.state_ == NodeState::Sleeping) node.continuation({cmd("WAKEUP")});
  });

  kind->command<P>("WAKEUP", [](P& node, const Command&, const Time&) { node.wakeup(); });

  // Connect(L) from a neighbor: absorb a lower fragment, merge with an
  // equal one over a shared branch, or defer.
  kind->handler<P, MsgConnect>("handle-msg-connect", [](P& node, const std::shared_ptr<const MsgConnect>& m, const Time&) {
    node.wakeup();
    Edge& e = node.edge(m->edge);
    if (m->level < node.level_) {
      node.set_edge_state(m->edge, EdgeState::Branch);
      auto init = std::make_shared<MsgInitiate>();
      init->edge = node.public_address();
      init->level = node.level_;
      init->state = node.state_;
      init->weight = node.fragment_weight_;
      send_message(m->edge, std::move(init));
      if (node.state_ == NodeState::Find) ++node.find_count_;
    } else if (e.state == EdgeState::Basic) {
      node.requeue(m);
    } else {
      auto init = std::make_shared<MsgInitiate>();
      init->edge = node.public_address();
      init->level = node.level_ + 1;
      init->state = NodeState::Find;
      init->weight = e.weight;
      send_message(m->edge, std::move(init));
    }
  });

  // Initiate(L, F, S): adopt the fragment identity and pass it down the tree.
  kind->handler<P, MsgInitiate>("handle-msg-initiate", [](P& node, const MsgInitiate& m, const Time&) {
    node.best_edge_.reset();
    node.best_weight_ = kInfinity;
    node.set_level(m.level);
    node.fragment_weight_ = m.weight;
    node.in_branch_ = m.edge;
    node.state_ = m.state;
    const auto targets = node.edges_in_state(EdgeState::Branch, m.edge);
    const Address self = node.public_address();
    send_message_batch(
        [&] {
          auto out = std::make_shared<MsgInitiate>();
          out->edge = self;
          out->level = m.level;
          out->state = m.state;
          out->weight = m.weight;
          return out;
        },
        targets);
    if (m.state == NodeState::Find) node.find_count_ += static_cast<std::int64_t>(targets.size());
    if (m.state == NodeState::Find) node.continuation({cmd("TEST")});
  });

  // Probe the lightest BASIC edge, or report if none is left.
  kind->command<P>("TEST", [](P& node, const Command&, const Time&) {
    node.test_edge_ = node.minimum_weight_edge(EdgeState::Basic);
    if (node.test_edge_) {
      auto t = std::make_shared<MsgTest>();
      t->edge = node.public_address();
      t->level = node.level_;
      t->weight = node.fragment_weight_;
      send_message(*node.test_edge_, std::move(t));
    } else {
      node.continuation({cmd("REPORT")});
    }
  });

  // Test(L, F): defer if the prober is ahead of us, accept a foreign
  // fragment, reject our own.
  kind->handler<P, MsgTest>("handle-msg-test", [](P& node, const std::shared_ptr<const MsgTest>& m, const Time&) {
    node.wakeup();
    if (m->level > node.level_) {
      node.requeue(m);
    } else if (m->weight != node.fragment_weight_) {
      auto a = std::make_shared<MsgAccept>();
      a->edge = node.public_address();
      send_message(m->edge, std::move(a));
    } else {
      if (node.edge(m->edge).state == EdgeState::Basic) node.set_edge_state(m->edge, EdgeState::Rejected);
      if (!node.test_edge_ || *node.test_edge_ != m->edge) {
        auto r = std::make_shared<MsgReject>();
        r->edge = node.public_address();
        send_message(m->edge, std::move(r));
      } else {
        node.continuation({cmd("TEST")});
      }
    }
  });

  kind->handler<P, MsgAccept>("handle-msg-accept", [](P& node, const MsgAccept& m, const Time&) {
    node.test_edge_.reset();
    const Weight w = node.edge(m.edge).weight;
    if (w < node.best_weight_) {
      node.best_edge_ = m.edge;
      node.best_weight_ = w;
    }
    node.continuation({cmd("REPORT")});
  });

  kind->handler<P, MsgReject>("handle-msg-reject", [](P& node, const MsgReject& m, const Time&) {
    if (node.edge(m.edge).state == EdgeState::Basic) node.set_edge_state(m.edge, EdgeState::Rejected);
    node.continuation({cmd("TEST")});
  });

  // Send the best outgoing weight up the in-branch once every child and
  // the local probe have answered.
  // A REPORT queued behind other frames can run after a sibling REPORT has
  // already fired; the FIND test keeps the second one silent.
  kind->command<P>("REPORT", [](P& node, const Command&, const Time&) {
    if (node.state_ == NodeState::Find && node.find_count_ == 0 && !node.test_edge_) {
      if (!node.in_branch_) throw ProtocolError(node.name() + " reports without an in-branch");
      node.state_ = NodeState::Found;
      auto r = std::make_shared<MsgReport>();
      r->edge = node.public_address();
      r->weight = node.best_weight_;
      send_message(*node.in_branch_, std::move(r));
    }
  });

  kind->handler<P, MsgReport>("handle-msg-report", [](P& node, const std::shared_ptr<const MsgReport>& m, const Time&) {
    if (!node.in_branch_ || m->edge != *node.in_branch_) {
      --node.find_count_;
      if (m->weight < node.best_weight_) {
        node.best_weight_ = m->weight;
        node.best_edge_ = m->edge;
      }
      node.continuation({cmd("REPORT")});
    } else if (node.state_ == NodeState::Find) {
      node.requeue(m);
    } else if (m->weight > node.best_weight_) {
      node.continuation({cmd("CHANGE-ROOT")});
    } else if (m->weight == node.best_weight_ && m->weight == kInfinity) {
      node.continuation({cmd("HALT")});
    }
  });

  // Walk toward the fragment's best edge and connect across it.
  kind->command<P>("CHANGE-ROOT", [](P& node, const Command&, const Time&) {
    if (!node.best_edge_) throw ProtocolError(node.name() + " CHANGE-ROOT without a best edge");
    const Address best = *node.best_edge_;
    if (node.edge(best).state == EdgeState::Branch) {
      auto c = std::make_shared<MsgChangeRoot>();
      c->edge = node.public_address();
      send_message(best, std::move(c));
    } else {
      auto c = std::make_shared<MsgConnect>();
      c->edge = node.public_address();
      c->level = node.level_;
      send_message(best, std::move(c));
      node.set_edge_state(best, EdgeState::Branch);
    }
  });

  kind->handler<P, MsgChangeRoot>("handle-msg-change-root", [](P& node, const MsgChangeRoot&, const Time&) {
    node.continuation({cmd("CHANGE-ROOT")});
  });

  kind->command<P>("HALT", [](P& node, const Command&, const Time&) {
    node.halted_ = true;
    node.log(EntryKind::User, {{"event", "halt"}});
  });

  // One clause for every GHS message, so they are served strictly oldest
  // first. Per-type clauses would let a message that keeps re-sending itself
  // to this inbox win every tick and starve the types listed after it.
  kind->define_handler("handle-ghs-message", [kind = std::weak_ptr<ProcessKind>(kind)](
                                                 Process& p, const MessagePtr& m, const Time& now) {
    static const std::map<std::string, std::string, std::less<>> route{
        {std::string(MsgConnect::kType), "handle-msg-connect"},
        {std::string(MsgInitiate::kType), "handle-msg-initiate"},
        {std::string(MsgTest::kType), "handle-msg-test"},
        {std::string(MsgAccept::kType), "handle-msg-accept"},
        {std::string(MsgReject::kType), "handle-msg-reject"},
        {std::string(MsgReport::kType), "handle-msg-report"},
        {std::string(MsgChangeRoot::kType), "handle-msg-change-root"}};
    auto it = route.find(m->type());
    if (it == route.end()) throw UnknownHandlerError("no GHS handler for " + std::string(m->type()));
    const HandlerBody* h = p.kind().find_handler(it->second);
    if (!h) throw UnknownHandlerError("missing handler " + it->second);
    (*h)(p, m, now);
  });
  kind->define_dispatch({DispatchClause{"MSG-*",
                                        [](const Message& m) { return dynamic_cast<const GhsFields*>(&m) != nullptr; },
                                        "handle-ghs-message",
                                        {}}});
  return kind;
}

/// 5 N log2 N + 2 E.
inline double ghs_message_bound(std::size_t n, std::size_t e) {
  return 5.0 * static_cast<double>(n) * std::log2(static_cast<double>(n)) + 2.0 * static_cast<double>(e);
}

struct GhsRun {
  World world;
  Graph graph;
  std::vector<std::shared_ptr<FragmentNode>> nodes;
  RunOutcome outcome = RunOutcome::Exhausted;
  std::size_t halted = 0;
  std::optional<std::string> violation;

  bool terminated() const { return halted > 0; }

  /// Graph edges marked BRANCH at either endpoint.
  std::vector<WeightedEdge> branch_edges() const {
    std::vector<WeightedEdge> out;
    for (const auto& e : graph.edges) {
      const auto& a = nodes[e.u]->adjacent_edges().at(nodes[e.v]->public_address());
      const auto& b = nodes[e.v]->adjacent_edges().at(nodes[e.u]->public_address());
      if (a.state == EdgeState::Branch || b.state == EdgeState::Branch) out.push_back(e);
    }
    return out;
  }

  /// Sends of the seven GHS message types, excluding self-addressed deferrals.
  std::uint64_t application_messages() const {
    const auto r = world.report();
    std::uint64_t total = 0;
    for (const auto& t : ghs_message_types()) total += r.count(t);
    return total;
  }

  double bound() const { return ghs_message_bound(graph.nodes, graph.edges.size()); }
};

/// Spawns one node per graph vertex, wires symmetric weighted edges and runs
/// until the first node halts (or the canary, default 1000 * N).
inline GhsRun run_ghs(const Graph& graph, RunOptions options = {}) {
  if (graph.nodes < 2) throw ScenarioError("GHS needs at least 2 nodes");
  if (!graph.connected()) throw ScenarioError("GHS needs a connected graph");
  std::set<Weight> weights;
  for (const auto& e : graph.edges) {
    if (e.u == e.v) throw ScenarioError("self-loop on node " + std::to_string(e.u));
    if (!weights.insert(e.weight).second) throw ScenarioError("duplicate edge weight " + std::to_string(e.weight));
  }
  GhsRun run{World(options, TopologySpec::all_to_all(graph.nodes)), graph, {}, RunOutcome::Exhausted, 0, std::nullopt};
  auto kind = make_fragment_node_kind();
  for (std::size_t i = 0; i < graph.nodes; ++i) run.nodes.push_back(spawn<FragmentNode>(run.world.place(i), {}, kind, i));
  for (const auto& e : graph.edges) {
    run.nodes[e.u]->add_edge(run.nodes[e.v]->public_address(), e.weight);
    run.nodes[e.v]->add_edge(run.nodes[e.u]->public_address(), e.weight);
  }
  auto nodes = run.nodes;
  auto any_halted = [nodes] {
    for (const auto& n : nodes)
      if (n->halted()) return true;
    return false;
  };
  const Time canary = options.canary.value_or(Time(static_cast<std::int64_t>(1000 * graph.nodes)));
  try {
    run.outcome = run.world.sim->run(canary_any(canary_when(any_halted), canary_until(canary)));
  } catch (const std::exception&) {
    try {
      rethrow_root_cause(std::current_exception());
    } catch (const InvariantViolation& v) {
      run.violation = v.what();
    } catch (...) {
      throw;
    }
  }
  for (const auto& n : run.nodes) run.halted += n->halted() ? 1 : 0;
  return run;
}

}  // namespace emsim::scenarios
