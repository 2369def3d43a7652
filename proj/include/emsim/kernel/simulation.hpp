#pragma once

#include "emsim/errors.hpp"
#include "emsim/instrumentation/log.hpp"
#include "emsim/kernel/bucket_queue.hpp"
#include "emsim/kernel/event.hpp"
#include "emsim/kernel/time.hpp"

#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <type_traits>
#include <typeindex>
#include <typeinfo>
#include <unordered_map>
#include <utility>
#include <vector>

namespace emsim {

class Simulation;

using Rng = std::mt19937_64;

/// Returns true to stop the run before `next` executes.
using StopCondition = std::function<bool(const Simulation&, const Event& next)>;

/// Picks which of `candidates` same-time events runs next (0 = oldest).
using TieBreakHook = std::function<std::size_t(std::size_t candidates, Rng& rng)>;

/// Stops before any event later than `t`; events at exactly `t` still run.
inline StopCondition canary_until(Time t) {
  return [t = std::move(t)](const Simulation&, const Event& next) { return next.time > t; };
}

/// Stops as soon as `pred()` holds, checked before every event.
inline StopCondition canary_when(std::function<bool()> pred) {
  return [pred = std::move(pred)](const Simulation&, const Event&) { return pred(); };
}

inline StopCondition canary_any(StopCondition a, StopCondition b) {
  return [a = std::move(a), b = std::move(b)](const Simulation& s, const Event& e) { return a(s, e) || b(s, e); };
}

/// Uniformly random choice among same-time events, drawn from the
/// simulation's own RNG so it stays reproducible under a fixed seed.
inline TieBreakHook shuffled_tie_break() {
  return [](std::size_t n, Rng& rng) { return static_cast<std::size_t>(rng() % n); };
}

enum class RunOutcome { Exhausted, Stopped };

class Simulation {
 public:
  explicit Simulation(std::uint64_t seed = 0) : rng_(seed) {}
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Time& horizon() const noexcept { return horizon_; }
  std::size_t pending_count() const noexcept { return queue_.size(); }
  std::size_t distinct_pending_times() const noexcept { return queue_.key_count(); }
  std::uint64_t executed_count() const noexcept { return executed_; }

  Rng& rng() noexcept { return rng_; }
  Log& log() noexcept { return log_; }
  const Log& log() const noexcept { return log_; }

  void set_tie_break_hook(TieBreakHook hook) { tie_break_ = std::move(hook); }

  /// Called with every event just before it executes.
  void set_observer(std::function<void(const Event&)> observer) { observer_ = std::move(observer); }

  void add_event(Event e) {
    if (e.time < horizon_)
      throw SchedulingInPastError("event '" + e.describe() + "' at t=" + e.time.display() +
                                  " precedes horizon " + horizon_.display());
    Time at = e.time;
    queue_.push(at, std::move(e));
  }

  /// Registers the default behaviour for entities of dynamic type E (or
  /// subclasses without a more specific registration). Latest wins.
  template <class E, class F>
  void register_entity_handler(F handler) {
    Registration r;
    r.type = std::type_index(typeid(E));
    r.matches = [](Entity& e) {
      if constexpr (std::is_same_v<E, Entity>)
        return true;
      else
        return dynamic_cast<E*>(&e) != nullptr;
    };
    r.run = [h = std::move(handler)](Entity& e, const Time& now) {
      return with_scheduling(now, [&](SchedulingContext& ctx) { h(static_cast<E&>(e), now, ctx); });
    };
    handlers_.push_back(std::move(r));
    handler_cache_.clear();
  }

  template <class E>
  bool has_entity_handler() const {
    const std::type_index t(typeid(E));
    for (const auto& r : handlers_)
      if (r.type == t) return true;
    return false;
  }

  RunOutcome run(const StopCondition& canary = {}) {
    while (!queue_.empty()) {
      std::size_t index = 0;
      if (tie_break_) {
        const auto n = queue_.top_bucket_size();
        if (n > 1) {
          index = tie_break_(n, rng_);
          if (index >= n) throw InvariantViolation("tie-break hook chose index past bucket");
        }
      }
      if (canary && canary(*this, queue_.top_at(index))) return RunOutcome::Stopped;

      auto [at, event] = queue_.pop_at(index);
      if (at < horizon_)
        throw InvariantViolation("horizon would move backwards: " + horizon_.display() + " -> " + at.display());
      horizon_ = std::move(at);
      ++executed_;
      if (observer_) observer_(event);

      EventList produced;
      try {
        produced = execute(event);
      } catch (const CallbackError&) {
        throw;
      } catch (const std::exception& ex) {
        std::throw_with_nested(CallbackError(horizon_.display(), ex.what()));
      }
      for (auto& e : produced) add_event(std::move(e));
    }
    return RunOutcome::Exhausted;
  }

 private:
  struct Registration {
    std::type_index type = std::type_index(typeid(void));
    std::function<bool(Entity&)> matches;
    std::function<EventList(Entity&, const Time&)> run;
  };

  EventList execute(Event& event) {
    if (auto* cb = std::get_if<Callback>(&event.action)) return (*cb)(horizon_);
    auto& entity = std::get<EntityPtr>(event.action);
    return handler_for(*entity).run(*entity, horizon_);
  }

  const Registration& handler_for(Entity& entity) {
    const std::type_index t(typeid(entity));
    if (auto it = handler_cache_.find(t); it != handler_cache_.end()) return handlers_[it->second];
    std::size_t found = handlers_.size();
    for (std::size_t i = handlers_.size(); i-- > 0;) {
      if (handlers_[i].type == t) {
        found = i;
        break;
      }
    }
    if (found == handlers_.size()) {
      for (std::size_t i = handlers_.size(); i-- > 0;) {
        if (handlers_[i].matches(entity)) {
          found = i;
          break;
        }
      }
    }
    if (found == handlers_.size())
      throw MissingHandlerError("no entity handler registered for '" + entity.name() + "'");
    handler_cache_.emplace(t, found);
    return handlers_[found];
  }

  BucketQueue<Time, Event> queue_;
  Time horizon_{0};
  std::uint64_t executed_ = 0;
  Rng rng_;
  TieBreakHook tie_break_;
  std::function<void(const Event&)> observer_;
  std::vector<Registration> handlers_;
  std::unordered_map<std::type_index, std::size_t> handler_cache_;
  Log log_;
};

}  // namespace emsim
