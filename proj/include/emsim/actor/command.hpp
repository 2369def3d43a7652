#pragma once

#include "emsim/errors.hpp"
#include "emsim/kernel/time.hpp"

#include <any>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace emsim {

class Process;
struct Command;

using FrameBody = std::function<void(Process&, const Command&, const Time&)>;

/// One command-stack frame: a name plus arguments.
///
/// User commands are resolved by name against the process kind when they
/// are popped. Library frames (sync-receive, with-replies, broadcast, ...)
/// carry their implementation in `body` instead.
struct Command {
  std::string name;
  std::vector<std::any> args;
  std::shared_ptr<const FrameBody> body;

  template <class T>
  const T& arg(std::size_t index) const {
    if (index >= args.size())
      throw CommandArgumentError("command " + name + " has no argument " + std::to_string(index));
    const T* v = std::any_cast<T>(&args[index]);
    if (!v) throw CommandArgumentError("command " + name + " argument " + std::to_string(index) + " has unexpected type");
    return *v;
  }

  std::int64_t int_arg(std::size_t index) const { return arg<std::int64_t>(index); }

  static Command frame(std::string name, FrameBody body, std::vector<std::any> args = {}) {
    return Command{std::move(name), std::move(args), std::make_shared<const FrameBody>(std::move(body))};
  }
};

namespace detail {
template <class T>
std::any command_arg(T&& v) {
  using D = std::decay_t<T>;
  if constexpr (std::is_integral_v<D> && !std::is_same_v<D, bool>)
    return std::any(static_cast<std::int64_t>(v));
  else if constexpr (std::is_same_v<D, const char*> || std::is_same_v<D, char*>)
    return std::any(std::string(v));
  else
    return std::any(std::forward<T>(v));
}
}  // namespace detail

/// cmd("FACTORIAL", 4) -> Command{"FACTORIAL", {int64_t{4}}}. Integral
/// arguments are widened to int64_t so that lookups are uniform.
template <class... Args>
Command cmd(std::string name, Args&&... args) {
  Command c{std::move(name), {}, nullptr};
  c.args.reserve(sizeof...(Args));
  (c.args.push_back(detail::command_arg(std::forward<Args>(args))), ...);
  return c;
}

}  // namespace emsim
