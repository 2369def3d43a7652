#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace emsim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// kernel
struct SchedulingInPastError : Error { using Error::Error; };
struct ContextFinishedError : Error { using Error::Error; };
struct MissingHandlerError : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };

/// Wraps an exception escaping a user callback; the original is nested.
struct CallbackError : Error {
  CallbackError(const std::string& horizon, const std::string& what)
      : Error("at t=" + horizon + ": " + what), horizon(horizon) {}
  std::string horizon;
};

// network
struct InboxError : Error { using Error::Error; };
struct DoubleUnregisterError : InboxError { using InboxError::InboxError; };
struct NoLocalCourierError : Error { using Error::Error; };
struct RoutingError : Error { using Error::Error; };

// actor
struct UnknownCommandError : Error { using Error::Error; };
struct UnknownHandlerError : Error { using Error::Error; };
struct DeadProcessError : Error { using Error::Error; };
struct CommandArgumentError : Error { using Error::Error; };

/// Wraps an exception raised while a process ticks; the original is nested.
struct ProcessError : Error {
  ProcessError(const std::string& process, const std::string& what)
      : Error(process + ": " + what), process(process) {}
  std::string process;
};

// stdlib / instrumentation / cli
struct ProtocolError : Error { using Error::Error; };
struct DereferenceError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ScenarioError : Error { using Error::Error; };

/// Walks nested exceptions and rethrows the innermost one.
[[noreturn]] inline void rethrow_root_cause(std::exception_ptr ep) {
  for (;;) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::nested_exception& nested) {
      if (!nested.nested_ptr()) throw;
      ep = nested.nested_ptr();
    }
  }
}

}  // namespace emsim
