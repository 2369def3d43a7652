#pragma once

#include "emsim/actor/sync.hpp"
#include "emsim/scenarios/common.hpp"
#include "emsim/stdlib/rpc.hpp"

#include <any>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace emsim::scenarios {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out))
    throw std::overflow_error("MULI overflow: " + std::to_string(a) + " * " + std::to_string(b));
  return out;
}

// ---------------------------------------------------------------------------
// A toy CPU driven directly by the kernel's entity dispatch.

enum class Op { Halt, Push, Muli };

struct Instruction {
  Op op = Op::Halt;
  std::int64_t arg = 0;
};

class ToyProcessor final : public Entity {
 public:
  ToyProcessor(std::vector<Instruction> program, Time rate = Time(1))
      : instructions_(std::move(program)), period_(rate.reciprocal()) {}

  std::string name() const override { return "toy-processor"; }

  const std::vector<std::int64_t>& data_stack() const noexcept { return data_; }
  std::size_t program_counter() const noexcept { return pc_; }
  bool halted() const noexcept { return halted_; }

  void step(const Time& now, SchedulingContext& ctx) {
    if (pc_ >= instructions_.size()) throw std::out_of_range("program counter ran past the program");
    ctx.schedule(shared_from_this(), now + period_);
    const Instruction& ins = instructions_[pc_];
    ++pc_;
    switch (ins.op) {
      case Op::Halt:
        halted_ = true;
        ctx.finish(EventList{});  // drop the reschedule
        return;
      case Op::Push:
        data_.push_back(ins.arg);
        return;
      case Op::Muli: {
        if (data_.empty()) throw std::logic_error("MULI on empty data stack");
        data_.back() = checked_mul(data_.back(), ins.arg);
        return;
      }
    }
  }

 private:
  std::vector<Instruction> instructions_;
  Time period_;
  std::vector<std::int64_t> data_;
  std::size_t pc_ = 0;
  bool halted_ = false;
};

inline void register_toy_processor(Simulation& sim) {
  sim.register_entity_handler<ToyProcessor>(
      [](ToyProcessor& p, const Time& now, SchedulingContext& ctx) { p.step(now, ctx); });
}

// ---------------------------------------------------------------------------
// The same CPU as a process: its program lives on the command stack.

inline std::int64_t pop_int(Process& p) {
  auto& ds = p.data_stack();
  if (ds.empty()) throw std::logic_error(p.name() + ": pop from empty data stack");
  auto v = std::any_cast<std::int64_t>(ds.back());
  ds.pop_back();
  return v;
}

inline KindPtr make_processor_kind() {
  auto kind = std::make_shared<ProcessKind>("PROCESSOR");
  kind->command<Process>("HALT", [](Process& p, const Command&, const Time&) { p.die(); });
  kind->command<Process>("PUSH", [](Process& p, const Command& c, const Time&) {
    p.data_stack().emplace_back(c.int_arg(0));
  });
  kind->command<Process>("MULI", [](Process& p, const Command& c, const Time&) {
    p.data_stack().emplace_back(checked_mul(c.int_arg(0), pop_int(p)));
  });
  kind->define_dispatch({});
  return kind;
}

struct MsgFactorial : MessageOf<MsgFactorial, "MESSAGE-FACTORIAL"> {
  std::int64_t n = 0;
};

/// A processor that loops in START waiting to compute factorials on request.
inline KindPtr make_arithmetic_server_kind() {
  auto kind = std::make_shared<ProcessKind>("ARITHMETIC-SERVER", *make_processor_kind());
  kind->command<Process>("START", [](Process& p, const Command&, const Time&) { p.continuation({cmd("START")}); });
  kind->command<Process>("EMIT", [](Process& p, const Command& c, const Time&) {
    const std::int64_t result = pop_int(p);
    send_message(c.arg<Address>(0), std::make_shared<RpcDone>(result));
  });
  kind->command<Process>("FACTORIAL", [](Process& p, const Command& c, const Time&) {
    const std::int64_t n = c.int_arg(0);
    if (n == 0)
      p.continuation({cmd("PUSH", 1)});
    else
      p.continuation({cmd("FACTORIAL", n - 1), cmd("MULI", n)});
  });
  kind->handler<Process, MsgFactorial>("handle-message-factorial", [](Process& p, const MsgFactorial& m, const Time&) {
    if (m.n < 0) throw ProtocolError("factorial of negative " + std::to_string(m.n));
    if (!m.reply_channel) throw ProtocolError("factorial request without a reply channel");
    p.continuation({cmd("FACTORIAL", m.n), cmd("EMIT", *m.reply_channel)});
  });
  kind->define_dispatch({serve<MsgFactorial>("handle-message-factorial")});
  return kind;
}

/// Asks a server for n! one request at a time, the long way round:
/// register a reply inbox, send, block on it, unregister.
class FactorialClient final : public Process {
 public:
  FactorialClient(KindPtr kind, Address server, std::vector<std::int64_t> requests)
      : Process(std::move(kind)), server_(server), requests_(std::move(requests)) {}

  const Address& server() const noexcept { return server_; }
  std::vector<std::int64_t>& requests() noexcept { return requests_; }
  std::vector<std::pair<std::int64_t, std::int64_t>>& results() noexcept { return results_; }
  const std::vector<std::pair<std::int64_t, std::int64_t>>& results() const noexcept { return results_; }
  std::vector<Address>& closed_reply_inboxes() noexcept { return closed_; }

 private:
  Address server_;
  std::vector<std::int64_t> requests_;
  std::vector<std::pair<std::int64_t, std::int64_t>> results_;
  std::vector<Address> closed_;
};

inline KindPtr make_factorial_client_kind() {
  auto kind = std::make_shared<ProcessKind>("FACTORIAL-CLIENT");
  kind->command<FactorialClient>("START", [](FactorialClient& p, const Command&, const Time&) {
    if (p.requests().empty()) {
      p.continuation({cmd("HALT")});
      return;
    }
    const std::int64_t n = p.requests().front();
    p.requests().erase(p.requests().begin());
    const Address reply = register_inbox();
    auto request = std::make_shared<MsgFactorial>();
    request->n = n;
    request->reply_channel = reply;
    send_message(p.server(), std::move(request));
    p.continuation({cmd("START")});
    sync_receive(p, reply, {on<RpcDone>([&p, n, reply](const RpcDone& done) {
                   p.results().emplace_back(n, std::any_cast<std::int64_t>(done.result));
                   unregister_inbox(reply);
                   p.closed_reply_inboxes().push_back(reply);
                 })});
  });
  kind->command<Process>("HALT", [](Process& p, const Command&, const Time&) { p.die(); });
  return kind;
}

struct FactorialRun {
  World world;
  std::shared_ptr<Process> server;
  std::shared_ptr<FactorialClient> client;
  std::vector<std::pair<std::int64_t, std::int64_t>> results;
  std::vector<std::any> server_stack_before;
  RunOutcome outcome = RunOutcome::Exhausted;
  bool finished = false;
};

/// Server on courier 0, client on courier 1 (two couriers by default).
inline FactorialRun run_factorial(std::vector<std::int64_t> ns, RunOptions options = {}) {
  FactorialRun run{World(options, TopologySpec::all_to_all(2)), nullptr, nullptr, {}, {}, RunOutcome::Exhausted, false};
  run.server = spawn<Process>(run.world.place(0), {}, make_arithmetic_server_kind());
  run.server->data_stack().emplace_back(std::int64_t{-7});  // sentinel that must survive every request
  run.server_stack_before = run.server->data_stack();
  run.client = spawn<FactorialClient>(run.world.place(1), {}, make_factorial_client_kind(),
                                      run.server->public_address(), std::move(ns));
  auto client = run.client;
  run.outcome = run.world.sim->run(
      canary_any(canary_when([client] { return !client->alive(); }), canary_until(options.canary.value_or(Time(100000)))));
  run.finished = !client->alive();
  run.results = client->results();
  return run;
}

/// Whether the server's data stack matches what it held before any request.
inline bool server_stack_restored(const FactorialRun& run) {
  const auto& now = run.server->data_stack();
  if (now.size() != run.server_stack_before.size()) return false;
  for (std::size_t i = 0; i < now.size(); ++i)
    if (std::any_cast<std::int64_t>(now[i]) != std::any_cast<std::int64_t>(run.server_stack_before[i])) return false;
  return true;
}

}  // namespace emsim::scenarios
