#include "emsim/stdlib/broadcast.hpp"
#include "emsim/stdlib/lock.hpp"
#include "emsim/stdlib/rpc.hpp"
#include "oracles/trees.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

using namespace emsim;

namespace {

struct MsgAdd : MessageOf<MsgAdd, "MSG-ADD"> {
  std::int64_t a = 0, b = 0;
};
struct MsgFlood : MessageOf<MsgFlood, "MSG-FLOOD"> {
  int wave = 0;
};
struct MsgCount : MessageOf<MsgCount, "MSG-COUNT"> {
  bool weigh = false;  // sum weights instead of counting nodes
};

class Node : public Process {
 public:
  Node(KindPtr k, std::int64_t w) : Process(std::move(k)), weight(w) {}
  std::int64_t weight;
  std::vector<Address> children;
  std::vector<std::string> seen;
};

KindPtr idle_kind(const std::string& name) {
  auto k = std::make_shared<ProcessKind>(name);
  k->define_command("START", [](Process&, const Command&, const Time&) {});
  return k;
}

/// A one-shot client that calls `ask` once and stores every reply.
struct Asker {
  std::vector<Reply> replies;
  Time answered_at{-1};
};

std::shared_ptr<Process> spawn_asker(Network& net, std::size_t slot, std::shared_ptr<Asker> out,
                                     std::vector<Address> targets, std::function<std::shared_ptr<Message>()> make) {
  auto kind = std::make_shared<ProcessKind>("ASKER");
  kind->define_command("START", [=](Process& p, const Command&, const Time&) {
    auto replies = send_message_batch(make, targets);
    with_replies(p, replies, [out](Process& self, const Replies& rs) {
      out->replies = rs;
      out->answered_at = self.now();
    });
  });
  return spawn<Process>(net.courier_at(slot), {}, kind);
}

struct TreeWorld {
  Simulation sim;
  Network net;
  std::vector<std::shared_ptr<Node>> nodes;

  TreeWorld(const oracle::Tree& t, KindPtr kind, std::size_t couriers)
      : sim(1), net(sim, TopologySpec::all_to_all(couriers)) {
    for (std::size_t i = 0; i < t.size(); ++i)
      nodes.push_back(spawn<Node>(net.courier_at(i % couriers), {}, kind, t.weight[i]));
    for (std::size_t i = 0; i < t.size(); ++i)
      for (auto c : t.children[i]) nodes[i]->children.push_back(nodes[c]->public_address());
  }
};

KindPtr tree_kind() {
  auto kind = idle_kind("TREE-NODE");
  define_broadcast_handler<Node, MsgFlood>(
      *kind, "flood", [](Node& n, const MsgFlood& m, const Time& now) {
        n.seen.push_back("wave" + std::to_string(m.wave) + "@" + now.display());
      },
      [](Node& n, const MsgFlood&) { return n.children; });
  define_convergecast_handler<Node, MsgCount, std::int64_t>(
      *kind, "count", [](Node& n, const MsgCount& m) { return m.weigh ? n.weight : std::int64_t{1}; },
      [](std::int64_t local, const std::vector<std::optional<std::int64_t>>& kids) {
        for (const auto& k : kids) local += k.value_or(0);
        return local;
      },
      [](Node& n, const MsgCount&) { return n.children; });
  kind->define_dispatch({serve<MsgFlood>("flood"), serve<MsgCount>("count")});
  return kind;
}

std::int64_t convergecast(const oracle::Tree& t, bool weigh, std::size_t couriers = 8) {
  TreeWorld w(t, tree_kind(), couriers);
  auto out = std::make_shared<Asker>();
  spawn_asker(w.net, 0, out, {w.nodes[0]->public_address()}, [weigh] {
    auto m = std::make_shared<MsgCount>();
    m->weigh = weigh;
    return m;
  });
  w.sim.run(canary_any(canary_when([&] { return out->answered_at >= Time(0); }), canary_until(Time(10000))));
  if (out->replies.size() != 1) return -1;
  return reply_as<std::int64_t>(out->replies[0]).value_or(-2);
}

}  // namespace

TEST(Rpc, HandlerResultTravelsBackInRpcDone) {
  Simulation sim;
  Network net(sim, TopologySpec::all_to_all(2));
  auto kind = idle_kind("ADDER");
  define_rpc_handler<Process, MsgAdd>(*kind, "add", [](Process&, const MsgAdd& m, const Time&) { return m.a + m.b; });
  kind->define_dispatch({serve<MsgAdd>("add")});
  auto server = spawn<Process>(net.courier_at(1), {}, kind);
  auto out = std::make_shared<Asker>();
  spawn_asker(net, 0, out, {server->public_address()}, [] {
    auto m = std::make_shared<MsgAdd>();
    m->a = 40;
    m->b = 2;
    return m;
  });
  sim.run(canary_until(Time(10)));
  ASSERT_EQ(out->replies.size(), 1u);
  EXPECT_EQ(reply_as<std::int64_t>(out->replies[0]), 42);
}

TEST(Rpc, VoidHandlerAcksAndBareRequestIsNotAnswered) {
  Simulation sim;
  Network net(sim, TopologySpec::all_to_all(1));
  int calls = 0;
  auto kind = idle_kind("SILENT");
  define_rpc_handler<Process, MsgAdd>(*kind, "add", [&calls](Process&, const MsgAdd&, const Time&) { ++calls; });
  kind->define_dispatch({serve<MsgAdd>("add")});
  auto server = spawn<Process>(net.courier_at(0), {}, kind);
  {
    CourierBinding b(net.courier_at(0));
    send_message(server->public_address(), std::make_shared<MsgAdd>());
  }
  auto out = std::make_shared<Asker>();
  spawn_asker(net, 0, out, {server->public_address()}, [] { return std::make_shared<MsgAdd>(); });
  sim.run(canary_until(Time(10)));
  EXPECT_EQ(calls, 2);
  ASSERT_EQ(out->replies.size(), 1u);
  ASSERT_TRUE(out->replies[0].has_value());
  EXPECT_FALSE(out->replies[0]->has_value());
  EXPECT_EQ(sim.log().count([](const LogEntry& e) {
    return e.kind == EntryKind::MessageSent && e.attr("type") == RpcDone::kType;
  }), 1u);
}

TEST(Rpc, SubordinateServesWhileMainStrandKeepsTicking) {
  Simulation sim;
  Network net(sim, TopologySpec::all_to_all(1));
  auto kind = std::make_shared<ProcessKind>("SUBSERVER");
  kind->command<Node>("START", [](Node& n, const Command&, const Time& now) {
    n.seen.push_back("main@" + now.display());
    n.continuation({cmd("START")});
  });
  define_message_subordinate<Node, MsgAdd>(*kind, "slow-add", [](Node& n, const MsgAdd& m, const Time&) {
    // Hold the request until a MsgFlood arrives in a private inbox we never
    // announce: this strand blocks forever, the main strand must not.
    Address hole = register_inbox();
    n.seen.push_back("sub-start");
    sync_receive(n, hole, {on<MsgFlood>([](const MsgFlood&) {})});
    (void)m;
  });
  kind->define_dispatch({serve<MsgAdd>("slow-add")});
  auto server = spawn<Node>(net.courier_at(0), {}, kind, 0);
  {
    CourierBinding b(net.courier_at(0));
    send_message(server->public_address(), std::make_shared<MsgAdd>());
  }
  sim.run(canary_until(Time(4)));
  EXPECT_EQ(server->strand_count(), 2u);
  EXPECT_EQ(server->seen, (std::vector<std::string>{"main@0", "main@1", "sub-start", "main@2", "main@3", "main@4"}));
}

TEST(Broadcast, AckArrivesOnlyAfterEveryNodeSawTheWave) {
  std::mt19937_64 rng(5);
  auto t = oracle::random_tree(20, rng);
  TreeWorld w(t, tree_kind(), 5);
  auto out = std::make_shared<Asker>();
  spawn_asker(w.net, 0, out, {w.nodes[0]->public_address()}, [] {
    auto m = std::make_shared<MsgFlood>();
    m->wave = 1;
    return m;
  });
  w.sim.run(canary_until(Time(500)));
  ASSERT_EQ(out->replies.size(), 1u);
  for (const auto& n : w.nodes) {
    ASSERT_EQ(n->seen.size(), 1u) << n->name();
    const auto at = Time::parse(n->seen[0].substr(n->seen[0].find('@') + 1));
    EXPECT_LT(at, out->answered_at);
  }
  EXPECT_TRUE(w.net.conserved());
}

TEST(Broadcast, WithoutReplyChannelItFloodsBare) {
  auto t = oracle::balanced_binary_tree(7);
  TreeWorld w(t, tree_kind(), 3);
  {
    CourierBinding b(w.net.courier_at(0));
    auto m = std::make_shared<MsgFlood>();
    m->wave = 2;
    send_message(w.nodes[0]->public_address(), m);
  }
  w.sim.run(canary_until(Time(50)));
  for (const auto& n : w.nodes) EXPECT_EQ(n->seen.size(), 1u);
  EXPECT_EQ(w.sim.log().count([](const LogEntry& e) {
    return e.kind == EntryKind::MessageSent && e.attr("type") == RpcDone::kType;
  }), 0u);
}

TEST(Convergecast, BalancedSevenNodeTreeCountsSeven) {
  auto t = oracle::balanced_binary_tree(7);
  EXPECT_EQ(convergecast(t, false), 7);
  EXPECT_EQ(convergecast(t, true), static_cast<std::int64_t>(oracle::subtree_weight(t)));
}

TEST(Convergecast, MatchesDirectTreeSizesOnRandomTrees) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 64;
    auto t = oracle::random_tree(n, rng);
    ASSERT_EQ(convergecast(t, false), static_cast<std::int64_t>(oracle::subtree_size(t))) << "n=" << n;
    ASSERT_EQ(convergecast(t, true), static_cast<std::int64_t>(oracle::subtree_weight(t))) << "n=" << n;
  }
}

TEST(Convergecast, RequestWithoutReplyChannelIsRejected) {
  auto t = oracle::balanced_binary_tree(1);
  TreeWorld w(t, tree_kind(), 1);
  {
    CourierBinding b(w.net.courier_at(0));
    send_message(w.nodes[0]->public_address(), std::make_shared<MsgCount>());
  }
  try {
    w.sim.run(canary_until(Time(5)));
    FAIL() << "expected an error";
  } catch (const CallbackError&) {
    bool protocol = false;
    try {
      rethrow_root_cause(std::current_exception());
    } catch (const ProtocolError&) {
      protocol = true;
    } catch (...) {
    }
    EXPECT_TRUE(protocol);
  }
}

// ---- Lock ------------------------------------------------------------------

namespace {

class Lockee : public LockableProcess {
 public:
  using LockableProcess::LockableProcess;
  std::vector<Address> targets;
  std::vector<Address> lockable_targets() const override { return targets; }
};

KindPtr lockee_kind() {
  auto kind = std::make_shared<ProcessKind>("LOCKEE", *make_lockable_kind());
  kind->define_command("START", [](Process&, const Command&, const Time&) {});
  kind->define_dispatch({serve<MsgLock>("handle-message-lock")});
  return kind;
}

struct LockWorld {
  Simulation sim;
  Network net;
  KindPtr kind = lockee_kind();
  explicit LockWorld(std::size_t couriers = 4) : net(sim, TopologySpec::all_to_all(couriers)) {}

  std::shared_ptr<Lockee> add(std::size_t slot, std::optional<Time> start = std::nullopt) {
    SpawnOptions o;
    o.start = start;
    return spawn<Lockee>(net.courier_at(slot), o, kind);
  }
  void at(Time t, std::function<void()> f) {
    sim.add_event(make_event(
        [f](const Time&) {
          f();
          return EventList{};
        },
        t));
  }
  void until(Time t) { sim.run(canary_until(t)); }
};

}  // namespace

TEST(Lock, HolderLocksClientsRecursivelyAndReleasesThem) {
  LockWorld w;
  auto holder = w.add(0), mid = w.add(1), leaf = w.add(2);
  mid->targets = {leaf->public_address()};
  holder->continuation({cmd("BROADCAST-LOCK", std::vector<Address>{mid->public_address()})});
  w.until(Time(20));
  EXPECT_TRUE(holder->holding());
  EXPECT_FALSE(holder->aborting());
  EXPECT_EQ(holder->acquired().size(), 1u);
  EXPECT_TRUE(mid->locked_as_client());
  EXPECT_TRUE(leaf->locked_as_client());

  w.at(Time(20), [&] { holder->continuation({cmd("BROADCAST-UNLOCK")}); });
  w.until(Time(40));
  EXPECT_FALSE(holder->holding());
  EXPECT_FALSE(mid->locked_as_client());
  EXPECT_FALSE(leaf->locked_as_client());
  EXPECT_EQ(mid->strand_count(), 1u);
  EXPECT_EQ(w.sim.log().count([](const LogEntry& e) { return e.kind == EntryKind::LockReleased; }), 1u);
}

TEST(Lock, SecondHolderAbortsWhileClientIsTakenThenSucceeds) {
  LockWorld w;
  auto a = w.add(0), b = w.add(1), c = w.add(2);
  const std::vector<Address> target{c->public_address()};
  a->continuation({cmd("BROADCAST-LOCK", target)});
  w.until(Time(10));
  ASSERT_TRUE(c->locked_as_client());
  w.at(Time(10), [&] { b->continuation({cmd("BROADCAST-LOCK", target)}); });
  w.until(Time(20));
  EXPECT_TRUE(b->holding());
  EXPECT_TRUE(b->aborting());
  EXPECT_TRUE(b->acquired().empty());

  w.at(Time(20), [&] {
    a->continuation({cmd("BROADCAST-UNLOCK")});
    b->continuation({cmd("BROADCAST-UNLOCK")});
  });
  w.until(Time(30));
  EXPECT_FALSE(c->locked_as_client());
  EXPECT_FALSE(b->holding());
  w.at(Time(30), [&] { b->continuation({cmd("BROADCAST-LOCK", target)}); });
  w.until(Time(40));
  EXPECT_FALSE(b->aborting());
  EXPECT_EQ(b->acquired().size(), 1u);
  EXPECT_TRUE(c->locked_as_client());
}

TEST(Lock, HoldingProcessRefusesToBecomeAClient) {
  LockWorld w;
  auto a = w.add(0), b = w.add(1), c = w.add(2);
  a->continuation({cmd("BROADCAST-LOCK", std::vector<Address>{c->public_address()})});
  w.until(Time(10));
  w.at(Time(10), [&] { b->continuation({cmd("BROADCAST-LOCK", std::vector<Address>{a->public_address()})}); });
  w.until(Time(20));
  EXPECT_TRUE(b->aborting());
  EXPECT_FALSE(a->locked_as_client());
}

TEST(Lock, LockedClientAbortsItsOwnAttempt) {
  LockWorld w;
  auto a = w.add(0), b = w.add(1), c = w.add(2);
  a->continuation({cmd("BROADCAST-LOCK", std::vector<Address>{b->public_address()})});
  w.until(Time(10));
  ASSERT_TRUE(b->locked_as_client());
  w.at(Time(10), [&] { b->continuation({cmd("BROADCAST-LOCK", std::vector<Address>{c->public_address()})}); });
  w.until(Time(20));
  EXPECT_TRUE(b->holding());
  EXPECT_TRUE(b->aborting());
  EXPECT_FALSE(c->locked_as_client());
}

TEST(Lock, MisuseIsAProtocolError) {
  LockWorld w;
  auto a = w.add(0);
  a->continuation({cmd("BROADCAST-UNLOCK")});
  EXPECT_THROW(w.until(Time(3)), CallbackError);

  LockWorld w2;
  auto b = w2.add(0), c = w2.add(1);
  b->continuation({cmd("BROADCAST-LOCK", std::vector<Address>{c->public_address()}),
                   cmd("BROADCAST-LOCK", std::vector<Address>{c->public_address()})});
  EXPECT_THROW(w2.until(Time(20)), CallbackError);
}
