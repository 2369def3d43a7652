#pragma once

#include "emsim/network/address.hpp"

#include <algorithm>
#include <any>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace emsim {

/// Compile-time string usable as a template argument.
template <std::size_t N>
struct FixedString {
  char data[N]{};
  constexpr FixedString(const char (&s)[N]) { std::copy_n(s, N, data); }  // NOLINT(implicit)
  constexpr std::string_view view() const { return {data, N - 1}; }
};

struct Message {
  virtual ~Message() = default;
  virtual std::string_view type() const = 0;
  virtual std::shared_ptr<Message> clone() const = 0;

  std::optional<Address> reply_channel;
};

using MessagePtr = std::shared_ptr<const Message>;

/// CRTP base giving a message type its tag and copy.
///
///   struct MsgPing : MessageOf<MsgPing, "MSG-PING"> { int seq = 0; };
template <class Derived, FixedString Tag>
struct MessageOf : Message {
  static constexpr std::string_view kType = Tag.view();
  std::string_view type() const override { return kType; }
  std::shared_ptr<Message> clone() const override {
    return std::make_shared<Derived>(static_cast<const Derived&>(*this));
  }
};

/// Reply envelope for remote procedure calls.
struct RpcDone : MessageOf<RpcDone, "MESSAGE-RPC-DONE"> {
  RpcDone() = default;
  explicit RpcDone(std::any r) : result(std::move(r)) {}
  std::any result;
};

/// Produced by a courier when a message targets a closed inbox and the
/// message named a reply channel.
struct ReturnToSender : MessageOf<ReturnToSender, "MESSAGE-RETURN-TO-SENDER"> {
  std::string original_type;
};

}  // namespace emsim
