#pragma once

#include "emsim/errors.hpp"
#include "emsim/instrumentation/dereference.hpp"
#include "emsim/instrumentation/log.hpp"
#include "emsim/instrumentation/trace.hpp"
#include "emsim/kernel/simulation.hpp"
#include "emsim/network/address.hpp"
#include "emsim/network/message.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace emsim {

class Network;
class Courier;

struct CourierSettings {
  Time rate{1};                          // ticks per time unit
  std::optional<std::size_t> bandwidth;  // packets per tick; unset = unlimited
  // Stop ticking while the transmit queue is empty and wake on the next
  // clock edge after a send. Lets a run drain to exhaustion.
  bool sleep_when_idle = false;
};

struct CourierOverride {
  std::optional<Time> rate;
  std::optional<std::size_t> bandwidth;
};

struct TopologySpec {
  enum class Kind { AllToAll, Grid };

  Kind kind = Kind::AllToAll;
  std::size_t count = 1;
  std::int64_t width = 1;
  std::int64_t height = 1;
  CourierSettings defaults;
  std::map<CourierId, CourierOverride> overrides;

  static TopologySpec all_to_all(std::size_t n, CourierSettings s = {}) {
    TopologySpec t;
    t.kind = Kind::AllToAll;
    t.count = n;
    t.defaults = std::move(s);
    return t;
  }

  static TopologySpec grid(std::int64_t w, std::int64_t h, CourierSettings s = {}) {
    TopologySpec t;
    t.kind = Kind::Grid;
    t.width = w;
    t.height = h;
    t.count = static_cast<std::size_t>(w * h);
    t.defaults = std::move(s);
    return t;
  }
};

/// Message accounting. At any point in a run:
///   sent == in_flight + in_inboxes + consumed + returned + dropped + discarded
struct NetworkStats {
  std::uint64_t sent = 0;       // includes courier-generated return-to-sender notices
  std::uint64_t consumed = 0;   // removed from an inbox by a receive
  std::uint64_t returned = 0;   // undeliverable, converted to a return-to-sender
  std::uint64_t dropped = 0;    // undeliverable, no reply channel
  std::uint64_t discarded = 0;  // still queued in an inbox when it was closed
  std::uint64_t hops = 0;       // courier-to-courier forwards
};

struct Packet {
  Address destination;
  MessagePtr message;
  Time enqueued{0};
  std::size_t hops = 0;
};

using Router = std::function<CourierId(const Courier& at, const Address& destination)>;

/// What the currently executing code is bound to: its local courier, a
/// source label for logs, and (for processes) its own public address.
struct AmbientBinding {
  Courier* courier = nullptr;
  std::string source;
  std::optional<Address> self;
  std::weak_ptr<Entity> owner;
};

namespace detail {
inline thread_local AmbientBinding* current_binding = nullptr;
}

/// Scoped binding of the local courier. Processes and couriers install one
/// automatically while they execute; tests can install one by hand.
class CourierBinding {
 public:
  explicit CourierBinding(Courier& courier, std::string source = "user", std::optional<Address> self = std::nullopt,
                          std::weak_ptr<Entity> owner = {})
      : binding_{&courier, std::move(source), std::move(self), std::move(owner)}, previous_(detail::current_binding) {
    detail::current_binding = &binding_;
  }
  ~CourierBinding() { detail::current_binding = previous_; }
  CourierBinding(const CourierBinding&) = delete;
  CourierBinding& operator=(const CourierBinding&) = delete;

 private:
  AmbientBinding binding_;
  AmbientBinding* previous_;
};

inline AmbientBinding& ambient() {
  if (!detail::current_binding || !detail::current_binding->courier)
    throw NoLocalCourierError("no local courier bound to the executing code");
  return *detail::current_binding;
}

inline bool has_local_courier() noexcept { return detail::current_binding && detail::current_binding->courier; }

inline Courier& local_courier() { return *ambient().courier; }

class Courier final : public Entity {
 public:
  Courier(Network& network, CourierId id, CourierSettings settings)
      : network_(&network), id_(std::move(id)), bandwidth_(settings.bandwidth), sleeps_(settings.sleep_when_idle) {
    set_rate(std::move(settings.rate));
  }

  const CourierId& id() const noexcept { return id_; }
  Network& network() const noexcept { return *network_; }
  std::string name() const override { return "courier" + to_string(id_); }

  const Time& rate() const noexcept { return rate_; }
  const Time& period() const noexcept { return period_; }
  void set_rate(Time rate) {
    if (rate <= Time(0)) throw std::invalid_argument("courier clock rate must be positive");
    period_ = rate.reciprocal();
    rate_ = std::move(rate);
  }
  std::optional<std::size_t> bandwidth() const noexcept { return bandwidth_; }
  void set_bandwidth(std::optional<std::size_t> b) noexcept { bandwidth_ = b; }

  Address open_inbox();
  void close_inbox(const Address& address);

  bool is_open(const Address& address) const {
    return address.courier == id_ && inboxes_.count(address.inbox) != 0;
  }

  /// Throws InboxError if the inbox is closed, was never issued, or lives elsewhere.
  std::deque<MessagePtr>& inbox(const Address& address) {
    if (address.courier != id_) throw InboxError("address " + to_string(address) + " is not served by " + name());
    auto it = inboxes_.find(address.inbox);
    if (it == inboxes_.end()) {
      if (address.inbox < next_inbox_) throw InboxError("inbox " + to_string(address) + " is closed");
      throw InboxError("inbox " + to_string(address) + " was never registered");
    }
    return it->second;
  }

  std::size_t open_inbox_count() const noexcept { return inboxes_.size(); }
  std::size_t queue_length() const noexcept { return queue_.size(); }
  std::size_t messages_held() const noexcept {
    std::size_t n = 0;
    for (const auto& [key, box] : inboxes_) n += box.size();
    return n;
  }

  bool asleep() const noexcept { return asleep_; }

  void enqueue(Packet p);

  /// Final hop: stash in the inbox, or handle an undeliverable message.
  void accept(Packet p, const Time& now);

  /// Entity behaviour: drain up to `bandwidth` packets queued before `now`.
  void tick(const Time& now, SchedulingContext& ctx);

 private:
  Network* network_;
  CourierId id_;
  Time rate_{1};
  Time period_{1};
  std::optional<std::size_t> bandwidth_;
  std::uint64_t next_inbox_ = 0;
  std::map<std::uint64_t, std::deque<MessagePtr>> inboxes_;
  std::deque<Packet> queue_;
  bool sleeps_ = false;
  bool asleep_ = false;
  Time last_tick_{0};
};

class Network {
 public:
  Network(Simulation& sim, TopologySpec spec) : sim_(&sim), spec_(std::move(spec)) {
    using Kind = TopologySpec::Kind;
    auto settings_for = [this](const CourierId& id) {
      CourierSettings s = spec_.defaults;
      if (auto it = spec_.overrides.find(id); it != spec_.overrides.end()) {
        if (it->second.rate) s.rate = *it->second.rate;
        if (it->second.bandwidth) s.bandwidth = it->second.bandwidth;
      }
      return s;
    };
    if (spec_.kind == Kind::AllToAll) {
      if (spec_.count == 0) throw std::invalid_argument("all-to-all network needs at least one courier");
      for (std::uint64_t i = 0; i < spec_.count; ++i) add_courier(CourierId{i}, settings_for(CourierId{i}));
    } else {
      if (spec_.width <= 0 || spec_.height <= 0) throw std::invalid_argument("grid dimensions must be positive");
      for (std::int64_t y = 0; y < spec_.height; ++y)
        for (std::int64_t x = 0; x < spec_.width; ++x) {
          CourierId id{GridCoord{x, y}};
          add_courier(id, settings_for(id));
        }
    }
    for (const auto& [id, o] : spec_.overrides)
      if (!by_id_.count(id)) throw std::invalid_argument("override names unknown courier " + to_string(id));

    sim.register_entity_handler<Courier>(
        [](Courier& c, const Time& now, SchedulingContext& ctx) { c.tick(now, ctx); });
    for (auto& c : order_) sim.add_event(make_event(c, sim.horizon()));
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Simulation& simulation() const noexcept { return *sim_; }
  const TopologySpec& spec() const noexcept { return spec_; }
  Log& log() const noexcept { return sim_->log(); }
  const Time& now() const noexcept { return sim_->horizon(); }

  std::size_t courier_count() const noexcept { return order_.size(); }
  const std::vector<std::shared_ptr<Courier>>& couriers() const noexcept { return order_; }
  Courier& courier_at(std::size_t index) const { return *order_.at(index); }

  Courier& courier(const CourierId& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw RoutingError("unknown courier " + to_string(id));
    return *it->second;
  }

  bool has_courier(const CourierId& id) const { return by_id_.count(id) != 0; }

  bool adjacent(const CourierId& a, const CourierId& b) const {
    if (a == b || !has_courier(a) || !has_courier(b)) return false;
    if (spec_.kind == TopologySpec::Kind::AllToAll) return true;
    return manhattan(std::get<GridCoord>(a), std::get<GridCoord>(b)) == 1;
  }

  /// Next hop from `at` toward `destination`. Grids correct x first, then y.
  CourierId route(const Courier& at, const Address& destination) const {
    if (router_) return router_(at, destination);
    if (spec_.kind == TopologySpec::Kind::AllToAll) return destination.courier;
    const auto here = std::get<GridCoord>(at.id());
    const auto* there = std::get_if<GridCoord>(&destination.courier);
    if (!there) throw RoutingError("grid courier cannot route to " + to_string(destination.courier));
    GridCoord next = here;
    if (there->x != here.x)
      next.x += there->x > here.x ? 1 : -1;
    else if (there->y != here.y)
      next.y += there->y > here.y ? 1 : -1;
    else
      throw RoutingError("route called for a local destination " + to_string(destination));
    return next;
  }

  void set_router(Router r) { router_ = std::move(r); }

  NetworkStats& stats() noexcept { return stats_; }
  const NetworkStats& stats() const noexcept { return stats_; }

  std::size_t in_flight() const {
    std::size_t n = 0;
    for (const auto& c : order_) n += c->queue_length();
    return n;
  }

  std::size_t in_inboxes() const {
    std::size_t n = 0;
    for (const auto& c : order_) n += c->messages_held();
    return n;
  }

  bool conserved() const {
    return stats_.sent == in_flight() + in_inboxes() + stats_.consumed + stats_.returned + stats_.dropped +
                              stats_.discarded;
  }

  DereferenceRegistry<Address>& registry() noexcept { return registry_; }
  Tracer& tracer() noexcept { return tracer_; }

  /// Enqueues on `from`'s transmit queue; delivery happens on later courier ticks.
  void send(Courier& from, const Address& destination, MessagePtr message, const std::string& source,
            bool to_self = false) {
    if (!message) throw std::invalid_argument("send: null message");
    ++stats_.sent;
    if (log().kind_enabled(EntryKind::MessageSent)) {
      Attributes attrs{{"type", std::string(message->type())}, {"to", to_string(destination)}};
      if (to_self) attrs.emplace_back("to-self", "true");
      log().append(now(), source, EntryKind::MessageSent, std::move(attrs));
    }
    from.enqueue(Packet{destination, std::move(message), now(), 0});
  }

 private:
  void add_courier(const CourierId& id, CourierSettings s) {
    auto c = std::make_shared<Courier>(*this, id, std::move(s));
    by_id_.emplace(id, c);
    order_.push_back(std::move(c));
  }

  Simulation* sim_;
  TopologySpec spec_;
  std::map<CourierId, std::shared_ptr<Courier>> by_id_;
  std::vector<std::shared_ptr<Courier>> order_;
  Router router_;
  NetworkStats stats_;
  DereferenceRegistry<Address> registry_;
  Tracer tracer_;
};

inline Address Courier::open_inbox() {
  Address a{id_, next_inbox_++};
  inboxes_.emplace(a.inbox, std::deque<MessagePtr>{});
  if (has_local_courier()) {
    if (auto owner = ambient().owner.lock()) network_->registry().record(a, owner);
  }
  return a;
}

inline void Courier::close_inbox(const Address& address) {
  if (address.courier != id_) throw InboxError("address " + to_string(address) + " is not served by " + name());
  auto it = inboxes_.find(address.inbox);
  if (it == inboxes_.end()) {
    if (address.inbox < next_inbox_) throw DoubleUnregisterError("inbox " + to_string(address) + " already unregistered");
    throw InboxError("inbox " + to_string(address) + " was never registered");
  }
  network_->stats().discarded += it->second.size();
  inboxes_.erase(it);
  network_->registry().forget(address);
}

inline void Courier::accept(Packet p, const Time& now) {
  Log& log = network_->log();
  auto it = inboxes_.find(p.destination.inbox);
  if (it != inboxes_.end()) {
    if (log.kind_enabled(EntryKind::MessageReceived))
      log.append(now, name(), EntryKind::MessageReceived,
                 {{"type", std::string(p.message->type())},
                  {"to", to_string(p.destination)},
                  {"hops", std::to_string(p.hops)}});
    it->second.push_back(std::move(p.message));
    return;
  }
  if (p.message->reply_channel) {
    ++network_->stats().returned;
    if (log.kind_enabled(EntryKind::MessageReturned))
      log.append(now, name(), EntryKind::MessageReturned,
                 {{"type", std::string(p.message->type())}, {"to", to_string(p.destination)}});
    auto notice = std::make_shared<ReturnToSender>();
    notice->original_type = std::string(p.message->type());
    network_->send(*this, *p.message->reply_channel, std::move(notice), name());
    return;
  }
  ++network_->stats().dropped;
  if (log.kind_enabled(EntryKind::MessageDropped))
    log.append(now, name(), EntryKind::MessageDropped,
               {{"type", std::string(p.message->type())}, {"to", to_string(p.destination)}});
}

inline void Courier::enqueue(Packet p) {
  queue_.push_back(std::move(p));
  if (!asleep_) return;
  // Next edge of this courier's clock strictly after now.
  const Time& now = network_->now();
  const Time elapsed = (now - last_tick_) / period_;
  const auto whole = boost::multiprecision::numerator(elapsed.value()) /
                     boost::multiprecision::denominator(elapsed.value());
  const Time next = last_tick_ + period_ * Time(Time::rep(whole + 1));
  asleep_ = false;
  network_->simulation().add_event(make_event(shared_from_this(), next));
}

inline void Courier::tick(const Time& now, SchedulingContext& ctx) {
  last_tick_ = now;
  const std::size_t budget = bandwidth_.value_or(std::numeric_limits<std::size_t>::max());
  std::size_t processed = 0;
  // Packets enqueued during this instant wait for the next tick.
  while (processed < budget && !queue_.empty() && queue_.front().enqueued < now) {
    Packet p = std::move(queue_.front());
    queue_.pop_front();
    ++processed;
    if (p.destination.courier == id_) {
      accept(std::move(p), now);
      continue;
    }
    const CourierId next = network_->route(*this, p.destination);
    if (!network_->adjacent(id_, next))
      throw RoutingError(name() + " routed toward " + to_string(p.destination) + " via non-neighbor " +
                         to_string(next));
    ++p.hops;
    ++network_->stats().hops;
    Courier& hop = network_->courier(next);
    if (next == p.destination.courier) {
      hop.accept(std::move(p), now);
    } else {
      p.enqueued = now;
      hop.enqueue(std::move(p));
    }
  }
  if (sleeps_ && queue_.empty()) {
    asleep_ = true;
    return;
  }
  ctx.schedule(shared_from_this(), now + period_);
}

// ---------------------------------------------------------------------------
// Messaging primitives. All of these act on the ambient local courier.

/// Opens a fresh inbox on the local courier.
inline Address register_inbox() { return local_courier().open_inbox(); }

/// Closes an inbox. Messages still waiting in it are discarded.
inline void unregister_inbox(const Address& address) {
  local_courier().network().courier(address.courier).close_inbox(address);
}

inline void send_message(const Address& destination, MessagePtr message) {
  auto& b = ambient();
  const bool to_self = b.self && *b.self == destination;
  b.courier->network().send(*b.courier, destination, std::move(message), b.source, to_self);
}

/// One branch of a receive: a type test plus the code to run on a match.
struct Clause {
  std::string_view type;
  std::function<bool(const Message&)> matches;
  std::function<void(const MessagePtr&)> body;
};

using ClauseList = std::vector<Clause>;

/// Clause matching messages of type M (or subclasses of M). The body may
/// take `const M&` or `std::shared_ptr<const M>`.
template <class M, class F>
Clause on(F body) {
  Clause c;
  c.type = M::kType;
  c.matches = [](const Message& m) { return dynamic_cast<const M*>(&m) != nullptr; };
  c.body = [body = std::move(body)](const MessagePtr& p) mutable {
    if constexpr (std::is_invocable_v<F&, const M&>)
      body(static_cast<const M&>(*p));
    else
      body(std::static_pointer_cast<const M>(p));
  };
  return c;
}

struct ReceiveOptions {
  bool peruse_inbox = true;
};

/// Non-blocking receive. Clauses are tried in order; each scans the inbox
/// oldest-first (or only its head when peruse_inbox is false). The first
/// hit is removed and its body runs. Returns the index of the clause that
/// ran, or nullopt (after running `otherwise`, if given) on a miss.
inline std::optional<std::size_t> receive_message(Network& network, const Address& address, const ClauseList& clauses,
                                                  const std::function<void()>& otherwise = {},
                                                  ReceiveOptions options = {}) {
  auto& box = network.courier(address.courier).inbox(address);
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const auto& clause = clauses[i];
    auto end = options.peruse_inbox ? box.end() : (box.empty() ? box.end() : box.begin() + 1);
    for (auto it = box.begin(); it != end; ++it) {
      if (!clause.matches(**it)) continue;
      MessagePtr m = std::move(*it);
      box.erase(it);
      ++network.stats().consumed;
      clause.body(m);
      return i;
    }
  }
  if (otherwise) otherwise();
  return std::nullopt;
}

inline std::optional<std::size_t> receive_message(const Address& address, const ClauseList& clauses,
                                                  const std::function<void()>& otherwise = {},
                                                  ReceiveOptions options = {}) {
  return receive_message(local_courier().network(), address, clauses, otherwise, options);
}

/// For each destination: opens a private reply inbox, builds a message
/// with that reply channel and sends it. Returns the reply addresses in
/// destination order.
template <class Constructor>
std::vector<Address> send_message_batch(Constructor&& make_message, const std::vector<Address>& destinations) {
  auto& b = ambient();
  Network& net = b.courier->network();
  std::vector<Address> replies;
  replies.reserve(destinations.size());
  for (const auto& d : destinations) {
    Address reply = b.courier->open_inbox();
    std::shared_ptr<Message> m = make_message();
    m->reply_channel = reply;
    const bool to_self = b.self && *b.self == d;
    net.send(*b.courier, d, std::move(m), b.source, to_self);
    replies.push_back(reply);
  }
  net.tracer().record(TraceRecord{TraceKind::BatchSend, destinations.size(), Time(0), b.source, net.now()});
  return replies;
}

}  // namespace emsim
