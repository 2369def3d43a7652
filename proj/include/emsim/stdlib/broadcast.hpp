#pragma once

#include "emsim/stdlib/rpc.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace emsim {

namespace detail {

inline std::shared_ptr<Message> clone_for_forwarding(const Message& m) {
  auto copy = m.clone();
  copy->reply_channel.reset();
  return copy;
}

}  // namespace detail

/// Registers a broadcast handler. On receipt the handler pushes a BROADCAST
/// frame and then runs `body`, so anything the body pushes runs first.
///
/// BROADCAST forwards a copy of the message to next_targets(process, message).
/// If the original carried a reply channel, every copy gets its own, the
/// frame waits for all acks and then acks upstream. Without one, copies go
/// out bare and nothing is awaited. No cycle detection: the target function
/// must describe a tree.
template <class P, class M, class Body, class Next>
ProcessKind& define_broadcast_handler(ProcessKind& kind, std::string id, Body body, Next next_targets) {
  return kind.define_handler(
      id, [body = std::move(body), next_targets = std::move(next_targets)](Process& base, const MessagePtr& m,
                                                                          const Time& now) {
        auto typed = std::dynamic_pointer_cast<const M>(m);
        if (!typed) throw std::logic_error("broadcast handler received " + std::string(m->type()));
        base.continuation({Command::frame(
            "BROADCAST",
            [typed, next_targets](Process& self, const Command&, const Time&) {
              P& p = process_cast<P>(self);
              std::vector<Address> targets = next_targets(p, *typed);
              if (!typed->reply_channel) {
                for (const auto& t : targets) send_message(t, detail::clone_for_forwarding(*typed));
                return;
              }
              auto replies = send_message_batch([&] { return detail::clone_for_forwarding(*typed); }, targets);
              with_replies(self, std::move(replies), [typed](Process&, const Replies&) { reply_to(*typed); });
            },
            {std::any(MessagePtr(typed))})});
        body(process_cast<P>(base), *typed, now);
      });
}

/// Registers a convergecast handler. Each node forwards the message to
/// next_targets, gathers the children's results and replies upstream with
/// combine(local_value(process, message), children). A child that could not
/// be reached contributes nullopt.
template <class P, class M, class V, class Local, class Combine, class Next>
ProcessKind& define_convergecast_handler(ProcessKind& kind, std::string id, Local local_value, Combine combine,
                                         Next next_targets) {
  return kind.define_handler(
      id, [local_value = std::move(local_value), combine = std::move(combine),
           next_targets = std::move(next_targets)](Process& base, const MessagePtr& m, const Time&) {
        auto typed = std::dynamic_pointer_cast<const M>(m);
        if (!typed) throw std::logic_error("convergecast handler received " + std::string(m->type()));
        if (!typed->reply_channel) throw ProtocolError("convergecast request without a reply channel");
        P& p = process_cast<P>(base);
        V local = local_value(p, *typed);
        base.continuation({Command::frame("CONVERGECAST", [typed, local, combine, next_targets](
                                                              Process& self, const Command&, const Time&) {
          P& proc = process_cast<P>(self);
          auto targets = next_targets(proc, *typed);
          auto replies = send_message_batch([&] { return detail::clone_for_forwarding(*typed); }, targets);
          with_replies(self, std::move(replies), [typed, local, combine](Process&, const Replies& values) {
            std::vector<std::optional<V>> children;
            children.reserve(values.size());
            for (const auto& v : values) children.push_back(reply_as<V>(v));
            reply_to(*typed, std::any(combine(local, children)));
          });
        })});
      });
}

}  // namespace emsim
