#pragma once

#include "emsim/scenarios/common.hpp"
#include "emsim/scenarios/graph.hpp"
#include "emsim/stdlib/lock.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <string>
#include <vector>

namespace emsim::scenarios {

struct MsgWrite : MessageOf<MsgWrite, "MESSAGE-WRITE"> {
  std::string payload;
};

class Writer final : public LockableProcess {
 public:
  Writer(KindPtr kind, Address target, std::vector<std::string> payload)
      : LockableProcess(std::move(kind)), target_(target), transmit_(payload.begin(), payload.end()) {}

  const Address& target() const noexcept { return target_; }
  std::deque<std::string>& transmit_list() noexcept { return transmit_; }
  const std::deque<std::string>& transmit_list() const noexcept { return transmit_; }
  std::size_t attempts = 0;

 private:
  Address target_;
  std::deque<std::string> transmit_;
};

class Reader final : public LockableProcess {
 public:
  using LockableProcess::LockableProcess;
  std::vector<Address> lockable_targets() const override { return {}; }

  /// Payload pieces in arrival order.
  std::vector<std::string> receive_list;
};

inline KindPtr make_writer_kind() {
  auto kind = std::make_shared<ProcessKind>("WRITER", *make_lockable_kind());
  kind->command<Writer>("START", [](Writer& p, const Command&, const Time&) {
    if (p.transmit_list().empty()) return;
    ++p.attempts;
    p.continuation({cmd("BROADCAST-LOCK", std::vector<Address>{p.target()}), cmd("TRANSMIT"), cmd("BROADCAST-UNLOCK"),
                    cmd("START")});
  });
  // Only consumes a piece once it is actually sent, so an aborted attempt
  // leaves the payload intact for the retry.
  kind->command<Writer>("TRANSMIT", [](Writer& p, const Command&, const Time&) {
    if (p.aborting() || p.transmit_list().empty()) return;
    auto m = std::make_shared<MsgWrite>();
    m->payload = p.transmit_list().front();
    p.transmit_list().pop_front();
    send_message(p.target(), std::move(m));
    p.continuation({cmd("TRANSMIT")});
  });
  kind->define_dispatch({});
  return kind;
}

inline KindPtr make_reader_kind() {
  auto kind = std::make_shared<ProcessKind>("READER", *make_lockable_kind());
  kind->command<Reader>("START", [](Reader& p, const Command&, const Time&) { p.continuation({cmd("START")}); });
  define_rpc_handler<Reader, MsgWrite>(*kind, "handle-message-write", [](Reader& p, const MsgWrite& m, const Time&) {
    p.receive_list.push_back(m.payload);
  });
  kind->define_dispatch({serve<MsgLock>("handle-message-lock"), serve<MsgWrite>("handle-message-write")});
  return kind;
}

struct WritersRun {
  World world;
  std::shared_ptr<Reader> reader;
  std::vector<std::shared_ptr<Writer>> writers;
  std::vector<std::vector<std::string>> payloads;
  RunOutcome outcome = RunOutcome::Exhausted;
  bool terminated = false;

  /// Every writer's payload appears as one contiguous, in-order block and
  /// nothing else was received.
  bool mutually_exclusive() const {
    const auto& got = reader->receive_list;
    std::size_t expected = 0;
    for (const auto& p : payloads) expected += p.size();
    if (got.size() != expected) return false;
    std::size_t i = 0;
    std::vector<bool> seen(payloads.size(), false);
    while (i < got.size()) {
      std::size_t w = payloads.size();
      for (std::size_t k = 0; k < payloads.size(); ++k)
        if (!seen[k] && !payloads[k].empty() && payloads[k].front() == got[i]) w = k;
      if (w == payloads.size()) return false;
      seen[w] = true;
      for (const auto& piece : payloads[w])
        if (i >= got.size() || got[i++] != piece) return false;
    }
    return true;
  }
};

/// Payload piece j of writer w is "w<w>:<j>", so every piece is unique.
inline std::vector<std::vector<std::string>> make_payloads(std::size_t writers, std::size_t parts) {
  std::vector<std::vector<std::string>> out(writers);
  for (std::size_t w = 0; w < writers; ++w)
    for (std::size_t j = 0; j < parts; ++j) out[w].push_back("w" + std::to_string(w) + ":" + std::to_string(j));
  return out;
}

/// Reader on process slot 0, writers after it. The seed staggers writer
/// start times and clock rates so the lock sees real contention.
inline WritersRun run_writers_reader(std::vector<std::vector<std::string>> payloads, RunOptions options = {}) {
  if (payloads.empty()) throw ScenarioError("writers-reader needs at least one writer");
  WritersRun run{World(options, TopologySpec::all_to_all(payloads.size() + 1)), nullptr, {}, payloads,
                 RunOutcome::Exhausted, false};
  Rng rng(options.seed ^ 0x5eedULL);
  run.reader = spawn<Reader>(run.world.place(0), {}, make_reader_kind());
  auto writer_kind = make_writer_kind();
  const Time rates[] = {Time(1), Time(2), Time(1, 2), Time(3, 2)};
  for (std::size_t w = 0; w < payloads.size(); ++w) {
    SpawnOptions so;
    so.clock_rate = rates[uniform_below(rng, 4)];
    so.start = Time(static_cast<std::int64_t>(uniform_below(rng, 8)), 2);
    run.writers.push_back(
        spawn<Writer>(run.world.place(w + 1), so, writer_kind, run.reader->public_address(), payloads[w]));
  }
  std::size_t total = 0;
  for (const auto& p : payloads) total += p.size();
  auto reader = run.reader;
  auto writers = run.writers;
  auto done = [reader, writers, total] {
    if (reader->receive_list.size() != total || reader->locked_as_client()) return false;
    return std::all_of(writers.begin(), writers.end(),
                       [](const auto& w) { return w->transmit_list().empty() && !w->holding(); });
  };
  const Time canary = options.canary.value_or(Time(static_cast<std::int64_t>(2000 + 200 * total)));
  run.outcome = run.world.sim->run(canary_any(canary_when(done), canary_until(canary)));
  run.terminated = done();
  return run;
}

}  // namespace emsim::scenarios
