#pragma once

#include "emsim/stdlib/rpc.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace emsim {

/// Lock request. The reply channel is mandatory: it receives either an
/// RpcDone carrying a private done-address (granted) or an empty RpcDone
/// (refused).
struct MsgLock : MessageOf<MsgLock, "MESSAGE-LOCK"> {};

/// Finish message sent by the holder to a client's done-address.
struct MsgUnlock : MessageOf<MsgUnlock, "MESSAGE-UNLOCK"> {};

/// A process that can hold a broadcast lock and be locked by others.
class LockableProcess : public Process {
 public:
  using Process::Process;

  /// Clients to lock recursively when this process is itself locked.
  virtual std::vector<Address> lockable_targets() const { return {}; }

  /// True when the latest BROADCAST-LOCK failed and has not been unwound.
  bool aborting() const noexcept { return aborting_; }
  bool holding() const noexcept { return holding_; }
  bool locked_as_client() const noexcept { return client_locked_; }
  const std::vector<Address>& acquired() const noexcept { return downstream_; }

 private:
  friend struct LockProtocol;

  bool holding_ = false;
  bool aborting_ = false;
  std::vector<Address> downstream_;
  bool client_locked_ = false;
  std::vector<Address> client_downstream_;
};

struct LockProtocol {
  using Done = std::function<void(LockableProcess&, bool ok, std::vector<Address> acquired)>;

  /// Requests locks from every target and calls `done` once all have answered.
  static void acquire(LockableProcess& p, const std::vector<Address>& targets, Done done) {
    auto replies = send_message_batch([] { return std::make_shared<MsgLock>(); }, targets);
    with_replies(p, std::move(replies), [done = std::move(done)](Process& self, const Replies& values) {
      std::vector<Address> acquired;
      bool ok = true;
      for (const auto& v : values) {
        if (auto a = reply_as<Address>(v))
          acquired.push_back(*a);
        else
          ok = false;
      }
      done(process_cast<LockableProcess>(self), ok, std::move(acquired));
    });
  }

  /// Sends finish messages to the done-addresses and waits for every ack.
  static void release(LockableProcess& p, const std::vector<Address>& done_addresses,
                      std::function<void(LockableProcess&)> after) {
    auto replies = send_message_batch([] { return std::make_shared<MsgUnlock>(); }, done_addresses);
    with_replies(p, std::move(replies), [after = std::move(after)](Process& self, const Replies&) {
      after(process_cast<LockableProcess>(self));
    });
  }

  static void broadcast_lock(LockableProcess& p, const std::vector<Address>& targets) {
    if (p.holding_) throw ProtocolError(p.name() + " issued BROADCAST-LOCK while already holding a lock");
    p.holding_ = true;
    p.aborting_ = false;
    p.downstream_.clear();
    if (p.client_locked_) {
      p.aborting_ = true;
      p.log(EntryKind::LockAborted, {{"reason", "locked-as-client"}});
      return;
    }
    acquire(p, targets, [](LockableProcess& self, bool ok, std::vector<Address> acquired) {
      self.downstream_ = std::move(acquired);
      self.aborting_ = !ok;
      self.log(ok ? EntryKind::LockAcquired : EntryKind::LockAborted,
               {{"acquired", std::to_string(self.downstream_.size())}});
    });
  }

  static void broadcast_unlock(LockableProcess& p) {
    if (!p.holding_) throw ProtocolError(p.name() + " issued BROADCAST-UNLOCK without a pending lock");
    release(p, p.downstream_, [](LockableProcess& self) {
      self.log(EntryKind::LockReleased, {{"released", std::to_string(self.downstream_.size())}});
      self.downstream_.clear();
      self.holding_ = false;
      self.aborting_ = false;
    });
  }

  /// Client side. Runs on a subordinate strand so the process keeps its
  /// own loop going while locked.
  static void serve_request(LockableProcess& p, const std::shared_ptr<const MsgLock>& request) {
    if (!request->reply_channel) throw ProtocolError("lock request without a reply channel");
    if (p.client_locked_ || p.holding_) {
      reply_to(*request);
      return;
    }
    p.client_locked_ = true;
    p.spawn_strand({Command::frame("LOCK-ACQUIRE", [request](Process& base, const Command&, const Time&) {
      auto& self = process_cast<LockableProcess>(base);
      acquire(self, self.lockable_targets(), [request](LockableProcess& me, bool ok, std::vector<Address> acquired) {
        me.client_downstream_ = std::move(acquired);
        if (!ok) {
          reply_to(*request);
          release(me, me.client_downstream_, [](LockableProcess& s) {
            s.client_downstream_.clear();
            s.client_locked_ = false;
          });
          return;
        }
        Address done = register_inbox();
        reply_to(*request, done);
        sync_receive(me, done, {on<MsgUnlock>([&me, done](const std::shared_ptr<const MsgUnlock>& finish) {
                       release(me, me.client_downstream_, [done, finish](LockableProcess& s) {
                         s.client_downstream_.clear();
                         s.client_locked_ = false;
                         unregister_inbox(done);
                         reply_to(*finish);
                       });
                     })});
      });
    })});
  }
};

/// Base kind for lockable processes: BROADCAST-LOCK (args[0] is a
/// std::vector<Address>), BROADCAST-UNLOCK and the "handle-message-lock"
/// handler. Derived kinds add `serve<MsgLock>("handle-message-lock")` to
/// their dispatch table.
inline KindPtr make_lockable_kind(std::string name = "PROCESS-LOCKABLE") {
  auto kind = std::make_shared<ProcessKind>(std::move(name));
  kind->command<LockableProcess>("BROADCAST-LOCK", [](LockableProcess& p, const Command& c, const Time&) {
    LockProtocol::broadcast_lock(p, c.arg<std::vector<Address>>(0));
  });
  kind->command<LockableProcess>("BROADCAST-UNLOCK", [](LockableProcess& p, const Command&, const Time&) {
    LockProtocol::broadcast_unlock(p);
  });
  kind->handler<LockableProcess, MsgLock>(
      "handle-message-lock", [](LockableProcess& p, const std::shared_ptr<const MsgLock>& m, const Time&) {
        LockProtocol::serve_request(p, m);
      });
  return kind;
}

}  // namespace emsim
