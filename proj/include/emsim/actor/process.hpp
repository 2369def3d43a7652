#pragma once

#include "emsim/actor/command.hpp"
#include "emsim/errors.hpp"
#include "emsim/kernel/simulation.hpp"
#include "emsim/network/network.hpp"

#include <algorithm>
#include <any>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace emsim {

class Process;

using CommandBody = std::function<void(Process&, const Command&, const Time&)>;
using HandlerBody = std::function<void(Process&, const MessagePtr&, const Time&)>;
using Guard = std::function<bool(const Process&)>;

/// One row of a dispatch table: which message type a handler services and
/// an optional guard over process state that can disable it.
struct DispatchClause {
  std::string type;
  std::function<bool(const Message&)> matches;
  std::string handler;
  Guard guard;
};

template <class P>
P& process_cast(Process& p);
template <class P>
const P& process_cast(const Process& p);

/// Routes messages of type M (or a subclass) to `handler_id`.
template <class M>
DispatchClause serve(std::string handler_id, Guard guard = {}) {
  return DispatchClause{std::string(M::kType),
                        [](const Message& m) { return dynamic_cast<const M*>(&m) != nullptr; },
                        std::move(handler_id), std::move(guard)};
}

/// As serve(), with the guard written against the concrete process type.
template <class M, class P, class G>
DispatchClause serve_when(std::string handler_id, G guard) {
  return serve<M>(std::move(handler_id),
                  [guard = std::move(guard)](const Process& p) { return guard(process_cast<P>(p)); });
}

/// Command, handler and dispatch tables for one kind of process.
///
/// A kind built from a parent starts with copies of the parent's tables.
/// Nothing is checked at registration time; a missing command or handler
/// surfaces only when it is executed.
class ProcessKind {
 public:
  explicit ProcessKind(std::string name) : name_(std::move(name)) {}
  ProcessKind(std::string name, const ProcessKind& parent)
      : name_(std::move(name)), commands_(parent.commands_), handlers_(parent.handlers_), dispatch_(parent.dispatch_) {}

  const std::string& name() const noexcept { return name_; }

  ProcessKind& define_command(std::string command, CommandBody body) {
    commands_[std::move(command)] = std::move(body);
    return *this;
  }

  ProcessKind& define_handler(std::string id, HandlerBody body) {
    handlers_[std::move(id)] = std::move(body);
    return *this;
  }

  ProcessKind& define_dispatch(std::vector<DispatchClause> clauses) {
    dispatch_ = std::move(clauses);
    return *this;
  }

  /// body(P&, const Command&, const Time& now)
  template <class P, class F>
  ProcessKind& command(std::string command, F body) {
    return define_command(std::move(command), [body = std::move(body)](Process& p, const Command& c, const Time& now) {
      body(process_cast<P>(p), c, now);
    });
  }

  /// body(P&, const M&, const Time& now)
  template <class P, class M, class F>
  ProcessKind& handler(std::string id, F body);

  const CommandBody* find_command(std::string_view command) const {
    auto it = commands_.find(std::string(command));
    return it == commands_.end() ? nullptr : &it->second;
  }

  const HandlerBody* find_handler(std::string_view id) const {
    auto it = handlers_.find(std::string(id));
    return it == handlers_.end() ? nullptr : &it->second;
  }

  const std::vector<DispatchClause>& dispatch_table() const noexcept { return dispatch_; }

 private:
  std::string name_;
  std::map<std::string, CommandBody> commands_;
  std::map<std::string, HandlerBody> handlers_;
  std::vector<DispatchClause> dispatch_;
};

using KindPtr = std::shared_ptr<ProcessKind>;

struct SpawnOptions {
  Time clock_rate{1};
  std::optional<Time> start;  // defaults to the current horizon
};

/// An actor: a public inbox, a clock, and one or more command stacks.
///
/// Each tick runs a dispatch phase (service at most `message_budget`
/// messages from the public inbox through the kind's dispatch table) and
/// then an upkeep phase (pop and run one command from each strand).
class Process : public Entity {
 public:
  explicit Process(KindPtr kind) : kind_(std::move(kind)) {
    if (!kind_) throw std::invalid_argument("process needs a kind");
  }

  std::string name() const override { return name_.empty() ? kind_->name() : name_; }
  const ProcessKind& kind() const noexcept { return *kind_; }

  bool alive() const noexcept { return alive_; }
  bool spawned() const noexcept { return courier_ != nullptr; }
  const Address& public_address() const {
    require_spawned();
    return *public_address_;
  }
  Courier& courier() const {
    require_spawned();
    return *courier_;
  }
  Network& network() const { return courier().network(); }
  Simulation& simulation() const { return network().simulation(); }
  const Time& now() const { return simulation().horizon(); }

  const Time& clock_rate() const noexcept { return rate_; }
  const Time& period() const noexcept { return period_; }
  std::uint64_t tick_count() const noexcept { return ticks_; }

  std::size_t message_budget() const noexcept { return message_budget_; }
  void set_message_budget(std::size_t n) noexcept { message_budget_ = n; }

  std::vector<std::any>& data_stack() noexcept { return data_stack_; }
  const std::vector<std::any>& data_stack() const noexcept { return data_stack_; }

  std::size_t strand_count() const noexcept { return strands_.size(); }

  /// Frames of one strand, top of stack first.
  std::vector<Command> stack(std::size_t strand = 0) const {
    const auto& s = strands_.at(strand);
    return {s.rbegin(), s.rend()};
  }

  std::vector<std::string> stack_names(std::size_t strand = 0) const {
    std::vector<std::string> out;
    for (const auto& c : stack(strand)) out.push_back(c.name);
    return out;
  }

  /// Pushes `commands` onto the active strand so that the first one runs next.
  void continuation(std::vector<Command> commands) {
    require_alive("process-continuation");
    auto& s = strands_.at(active_);
    for (auto it = commands.rbegin(); it != commands.rend(); ++it) s.push_back(std::move(*it));
  }

  /// Adds a subordinate strand. One added by a handler takes its first step
  /// in the same tick's upkeep phase; one added during upkeep waits a tick.
  void spawn_strand(std::vector<Command> commands) {
    require_alive("spawn-subordinate");
    if (commands.empty()) return;
    std::vector<Command> s;
    for (auto it = commands.rbegin(); it != commands.rend(); ++it) s.push_back(std::move(*it));
    strands_.push_back(std::move(s));
  }

  void die() {
    require_alive("process-die");
    alive_ = false;
    strands_.assign(1, {});
    courier_->close_inbox(*public_address_);
    log(EntryKind::ProcessDied);
  }

  /// Emits a log entry attributed to this process.
  void log(EntryKind kind, Attributes attrs = {}) const {
    auto& l = simulation().log();
    if (l.kind_enabled(kind)) l.append(now(), name(), kind, std::move(attrs));
  }

  void tick(const Time& now, SchedulingContext& ctx) {
    if (!alive_) return;
    ++ticks_;
    {
      CourierBinding binding(*courier_, name(), public_address_, weak_from_this());
      try {
        dispatch_phase(now);
        if (alive_) upkeep_phase(now);
      } catch (const ProcessError&) {
        throw;
      } catch (const std::exception& e) {
        std::throw_with_nested(ProcessError(name(), e.what()));
      }
    }
    if (alive_) ctx.schedule(shared_from_this(), now + period_);
  }

 private:
  template <class P, class... Args>
  friend std::shared_ptr<P> spawn(Courier& courier, SpawnOptions options, Args&&... args);

  void require_spawned() const {
    if (!courier_) throw std::logic_error("process '" + name() + "' has not been spawned");
  }

  void require_alive(const char* op) const {
    if (!alive_) throw DeadProcessError(std::string(op) + " on dead process '" + name() + "'");
  }

  void dispatch_phase(const Time& now) {
    const auto& table = kind_->dispatch_table();
    if (table.empty()) return;
    for (std::size_t served = 0; served < message_budget_ && alive_; ++served) {
      auto& box = courier_->inbox(*public_address_);
      bool fired = false;
      for (const auto& clause : table) {
        if (clause.guard && !clause.guard(*this)) continue;
        auto it = std::find_if(box.begin(), box.end(), [&](const MessagePtr& m) { return clause.matches(*m); });
        if (it == box.end()) continue;
        MessagePtr message = std::move(*it);
        box.erase(it);
        ++network().stats().consumed;
        const HandlerBody* handler = kind_->find_handler(clause.handler);
        if (!handler) throw UnknownHandlerError("no handler '" + clause.handler + "' for kind " + kind_->name());
        log(EntryKind::HandlerFired, {{"handler", clause.handler}, {"type", std::string(message->type())}});
        active_ = 0;
        (*handler)(*this, message, now);
        fired = true;
        break;
      }
      if (!fired) break;
    }
  }

  void upkeep_phase(const Time& now) {
    const std::size_t n = strands_.size();
    for (std::size_t i = 0; i < n && alive_; ++i) {
      if (strands_[i].empty()) continue;
      Command c = std::move(strands_[i].back());
      strands_[i].pop_back();
      active_ = i;
      execute(c, now);
    }
    active_ = 0;
    if (alive_ && strands_.size() > 1)
      strands_.erase(std::remove_if(strands_.begin() + 1, strands_.end(), [](const auto& s) { return s.empty(); }),
                     strands_.end());
  }

  void execute(const Command& c, const Time& now) {
    log(EntryKind::CommandExecuted, {{"command", c.name}});
    if (c.body) {
      (*c.body)(*this, c, now);
      return;
    }
    const CommandBody* body = kind_->find_command(c.name);
    if (!body) throw UnknownCommandError("unknown command " + c.name + " for kind " + kind_->name());
    (*body)(*this, c, now);
  }

  KindPtr kind_;
  std::string name_;
  Courier* courier_ = nullptr;
  std::optional<Address> public_address_;
  Time rate_{1};
  Time period_{1};
  bool alive_ = false;
  std::uint64_t ticks_ = 0;
  std::size_t message_budget_ = 1;
  std::size_t active_ = 0;
  std::vector<std::vector<Command>> strands_{1};
  std::vector<std::any> data_stack_;
};

template <class P>
P& process_cast(Process& p) {
  if constexpr (std::is_same_v<P, Process>) {
    return p;
  } else {
    auto* typed = dynamic_cast<P*>(&p);
    if (!typed) throw std::logic_error("process '" + p.name() + "' is not of the expected type");
    return *typed;
  }
}

template <class P>
const P& process_cast(const Process& p) {
  return process_cast<P>(const_cast<Process&>(p));
}

template <class P, class M, class F>
ProcessKind& ProcessKind::handler(std::string id, F body) {
  return define_handler(std::move(id), [body = std::move(body)](Process& p, const MessagePtr& m, const Time& now) {
    const auto* typed = dynamic_cast<const M*>(m.get());
    if (!typed) throw std::logic_error("handler received " + std::string(m->type()) + ", expected " + std::string(M::kType));
    if constexpr (std::is_invocable_v<F&, P&, const M&, const Time&>)
      body(process_cast<P>(p), *typed, now);
    else
      body(process_cast<P>(p), std::static_pointer_cast<const M>(m), now);
  });
}

/// Constructs a process, opens its public inbox on `courier`, seeds its
/// primary strand with (START) and schedules its first tick.
template <class P, class... Args>
std::shared_ptr<P> spawn(Courier& courier, SpawnOptions options, Args&&... args) {
  static_assert(std::is_base_of_v<Process, P>);
  if (options.clock_rate <= Time(0)) throw std::invalid_argument("process clock rate must be positive");
  auto p = std::make_shared<P>(std::forward<Args>(args)...);
  Network& net = courier.network();
  Simulation& sim = net.simulation();
  if (!sim.has_entity_handler<Process>())
    sim.register_entity_handler<Process>([](Process& proc, const Time& now, SchedulingContext& ctx) { proc.tick(now, ctx); });

  Process& base = *p;
  base.courier_ = &courier;
  base.public_address_ = courier.open_inbox();
  base.name_ = base.kind_->name() + "@" + to_string(*base.public_address_);
  base.period_ = options.clock_rate.reciprocal();
  base.rate_ = std::move(options.clock_rate);
  base.alive_ = true;
  base.strands_.assign(1, {});
  base.strands_[0].push_back(cmd("START"));
  net.registry().record(*base.public_address_, p);
  base.log(EntryKind::ProcessSpawned, {{"address", to_string(*base.public_address_)}});
  sim.add_event(make_event(std::static_pointer_cast<Entity>(p), options.start.value_or(sim.horizon())));
  return p;
}

}  // namespace emsim
