#pragma once

#include "emsim/actor/sync.hpp"

#include <any>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>

namespace emsim {

/// Sends RpcDone(result) to the message's reply channel, if it has one.
inline bool reply_to(const Message& m, std::any result = {}) {
  if (!m.reply_channel) return false;
  send_message(*m.reply_channel, std::make_shared<RpcDone>(std::move(result)));
  return true;
}

/// Registers a handler whose return value is shipped back in an RpcDone.
/// A void body acknowledges with an empty result. Requests without a reply
/// channel are serviced but not answered.
template <class P, class M, class F>
ProcessKind& define_rpc_handler(ProcessKind& kind, std::string id, F body) {
  return kind.handler<P, M>(std::move(id), [body = std::move(body)](P& p, const M& m, const Time& now) {
    using R = std::invoke_result_t<F&, P&, const M&, const Time&>;
    if constexpr (std::is_void_v<R>) {
      body(p, m, now);
      reply_to(m);
    } else {
      std::any result(body(p, m, now));
      reply_to(m, std::move(result));
    }
  });
}

/// Registers a handler that services each message on a fresh subordinate
/// strand. The body runs as that strand's first frame and may block
/// (sync_receive, with_replies) without holding up the primary strand.
template <class P, class M, class F>
ProcessKind& define_message_subordinate(ProcessKind& kind, std::string id, F body) {
  return kind.define_handler(id, [id, body = std::move(body)](Process& p, const MessagePtr& m, const Time&) {
    auto typed = std::dynamic_pointer_cast<const M>(m);
    if (!typed) throw std::logic_error("subordinate " + id + " received " + std::string(m->type()));
    p.spawn_strand({Command::frame(id, [body, typed](Process& self, const Command&, const Time& now) {
      body(process_cast<P>(self), *typed, now);
    })});
  });
}

}  // namespace emsim
