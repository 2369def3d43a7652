#pragma once

#include "emsim/actor/process.hpp"

#include <any>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace emsim {

/// Blocking receive at command level. Tries once now; on a miss it pushes a
/// SYNC-RECEIVE frame that retries on every later tick, holding up whatever
/// sits beneath it on the same strand.
inline void sync_receive(Process& p, const Address& address, ClauseList clauses, ReceiveOptions options = {}) {
  auto shared = std::make_shared<const ClauseList>(std::move(clauses));
  auto attempt = [address, shared, options](Process& self) {
    return receive_message(self.network(), address, *shared, {}, options).has_value();
  };
  if (attempt(p)) return;
  p.continuation({Command::frame("SYNC-RECEIVE", [attempt](Process& self, const Command& me, const Time&) {
    if (!attempt(self)) self.continuation({me});
  })});
}

/// A gathered reply: the unboxed result, or nullopt for a return-to-sender.
using Reply = std::optional<std::any>;
using Replies = std::vector<Reply>;
using RepliesBody = std::function<void(Process&, const Replies&)>;

namespace detail {

inline bool reply_ready(Network& net, const Address& a) {
  for (const auto& m : net.courier(a.courier).inbox(a))
    if (dynamic_cast<const RpcDone*>(m.get()) || dynamic_cast<const ReturnToSender*>(m.get())) return true;
  return false;
}

struct GatherState {
  std::vector<Address> addresses;
  RepliesBody body;
  bool unbox = true;
  Time started{0};
};

/// Runs the body and returns true once every address holds a reply.
inline bool try_gather(Process& p, const GatherState& st, const Time& now) {
  Network& net = p.network();
  for (const auto& a : st.addresses)
    if (!reply_ready(net, a)) return false;
  Replies values;
  values.reserve(st.addresses.size());
  for (const auto& a : st.addresses) {
    receive_message(net, a,
                    {on<RpcDone>([&](const std::shared_ptr<const RpcDone>& m) {
                       values.emplace_back(st.unbox ? m->result : std::any(MessagePtr(m)));
                     }),
                     on<ReturnToSender>([&](const ReturnToSender&) { values.emplace_back(std::nullopt); })});
    net.courier(a.courier).close_inbox(a);
  }
  net.tracer().record(TraceRecord{TraceKind::RpcWait, st.addresses.size(), now - st.started, p.name(), now});
  st.body(p, values);
  return true;
}

}  // namespace detail

/// Busy-waits until each reply address holds an rpc-done or a
/// return-to-sender, then closes them all and runs `body` with the values in
/// address order. With `unbox` false each value holds the RpcDone message
/// itself (as a MessagePtr).
inline void with_replies(Process& p, std::vector<Address> addresses, RepliesBody body, bool unbox = true) {
  auto st = std::make_shared<const detail::GatherState>(
      detail::GatherState{std::move(addresses), std::move(body), unbox, p.now()});
  if (detail::try_gather(p, *st, p.now())) return;
  p.continuation({Command::frame("WITH-REPLIES", [st](Process& self, const Command& me, const Time& now) {
    if (!detail::try_gather(self, *st, now)) self.continuation({me});
  })});
}

/// Extracts a typed value from a gathered reply.
template <class T>
std::optional<T> reply_as(const Reply& r) {
  if (!r) return std::nullopt;
  if (const T* v = std::any_cast<T>(&*r)) return *v;
  return std::nullopt;
}

}  // namespace emsim
