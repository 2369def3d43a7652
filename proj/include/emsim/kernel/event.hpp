#pragma once

#include "emsim/errors.hpp"
#include "emsim/kernel/time.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace emsim {

/// A simulated object whose default behaviour is supplied by an entity
/// handler registered with the Simulation (see register_entity_handler).
class Entity : public std::enable_shared_from_this<Entity> {
 public:
  virtual ~Entity() = default;
  virtual std::string name() const = 0;
};

using EntityPtr = std::shared_ptr<Entity>;

struct Event;
using EventList = std::vector<Event>;
using Callback = std::function<EventList(const Time& now)>;

struct Event {
  Time time;
  std::variant<Callback, EntityPtr> action;
  std::string label;

  bool is_entity() const noexcept { return std::holds_alternative<EntityPtr>(action); }

  std::string describe() const {
    if (auto* e = std::get_if<EntityPtr>(&action)) return (*e)->name();
    return label.empty() ? std::string("callback") : label;
  }
};

inline Event make_event(Callback callback, Time at = Time(0), std::string label = {}) {
  return Event{std::move(at), std::move(callback), std::move(label)};
}

inline Event make_event(EntityPtr entity, Time at = Time(0)) {
  return Event{std::move(at), std::move(entity), {}};
}

/// Collects events from inside a callback body.
///
/// Once finish() has been called the context is closed and further
/// schedule/absorb calls throw ContextFinishedError.
class SchedulingContext {
 public:
  explicit SchedulingContext(Time now) : now_(std::move(now)) {}

  const Time& now() const noexcept { return now_; }
  bool finished() const noexcept { return finished_; }
  const EventList& accumulated() const noexcept { return accumulated_; }

  void schedule(Callback callback, Time at, std::string label = {}) {
    schedule(make_event(std::move(callback), std::move(at), std::move(label)));
  }
  void schedule(EntityPtr entity, Time at) { schedule(make_event(std::move(entity), std::move(at))); }
  void schedule(Event e) {
    require_open("schedule");
    accumulated_.push_back(std::move(e));
  }

  /// Adjoins the events returned by another callback, preserving order.
  void absorb(EventList events) {
    require_open("absorb");
    for (auto& e : events) accumulated_.push_back(std::move(e));
  }

  /// Closes the context. Returns `override` if given, else what was collected.
  EventList finish(std::optional<EventList> override = std::nullopt) {
    finished_ = true;
    result_ = override ? std::move(*override) : std::move(accumulated_);
    accumulated_.clear();
    return result_;
  }

  EventList take_result() { return std::move(result_); }

 private:
  void require_open(const char* op) const {
    if (finished_) throw ContextFinishedError(std::string(op) + " after finish-with-scheduling");
  }

  Time now_;
  EventList accumulated_;
  EventList result_;
  bool finished_ = false;
};

/// Runs `body(ctx)` and returns the collected events, or the finish()
/// result if the body closed the context itself.
template <class Body>
EventList with_scheduling(const Time& now, Body&& body) {
  SchedulingContext ctx(now);
  std::forward<Body>(body)(ctx);
  if (!ctx.finished()) ctx.finish();
  return ctx.take_result();
}

}  // namespace emsim
