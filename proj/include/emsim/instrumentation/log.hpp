#pragma once

#include "emsim/kernel/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace emsim {

enum class EntryKind {
  MessageSent,
  MessageReceived,
  MessageReturned,
  MessageDropped,
  HandlerFired,
  CommandExecuted,
  ProcessSpawned,
  ProcessDied,
  LockAcquired,
  LockAborted,
  LockReleased,
  User,
};

inline constexpr std::array<std::string_view, 12> kEntryKindNames{
    "message-sent",   "message-received", "message-returned", "message-dropped",
    "handler-fired",  "command-executed", "process-spawned",  "process-died",
    "lock-acquired",  "lock-aborted",     "lock-released",    "user",
};

inline std::string_view to_string(EntryKind k) { return kEntryKindNames[static_cast<std::size_t>(k)]; }

using Attributes = std::vector<std::pair<std::string, std::string>>;

struct LogEntry {
  Time time;
  std::string source;
  EntryKind kind = EntryKind::User;
  Attributes attrs;

  /// Empty view when the attribute is absent.
  std::string_view attr(std::string_view key) const {
    for (const auto& [k, v] : attrs)
      if (k == key) return v;
    return {};
  }
  bool has_attr(std::string_view key) const {
    return std::any_of(attrs.begin(), attrs.end(), [&](const auto& kv) { return kv.first == key; });
  }
};

/// Append-only structured log owned by a Simulation.
///
/// Entries are stamped with the simulation horizon at emission time, so the
/// log is time-ordered by construction. Individual kinds can be muted to
/// keep long runs cheap; muting never affects the simulation itself.
class Log {
 public:
  bool enabled() const noexcept { return enabled_; }
  void set_enabled(bool on) noexcept { enabled_ = on; }

  void set_kind_enabled(EntryKind k, bool on) { muted_[static_cast<std::size_t>(k)] = !on; }
  bool kind_enabled(EntryKind k) const { return enabled_ && !muted_[static_cast<std::size_t>(k)]; }

  void append(const Time& now, std::string source, EntryKind kind, Attributes attrs = {}) {
    if (!kind_enabled(kind)) return;
    entries_.push_back(LogEntry{now, std::move(source), kind, std::move(attrs)});
  }

  const std::vector<LogEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

  std::vector<LogEntry> query(const std::function<bool(const LogEntry&)>& pred) const {
    std::vector<LogEntry> out;
    std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out), pred);
    return out;
  }

  std::size_t count(const std::function<bool(const LogEntry&)>& pred) const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), pred));
  }

  static nlohmann::ordered_json to_json(const LogEntry& e) {
    nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : e.attrs) attrs[k] = v;
    nlohmann::ordered_json j;
    j["t"] = e.time.str();
    j["src"] = e.source;
    j["kind"] = std::string(to_string(e.kind));
    j["attrs"] = std::move(attrs);
    return j;
  }

  /// One JSON object per line: {"t":"num/den","src":...,"kind":...,"attrs":{...}}
  void write_jsonl(std::ostream& os) const {
    for (const auto& e : entries_) os << to_json(e).dump() << '\n';
  }

 private:
  bool enabled_ = true;
  std::array<bool, kEntryKindNames.size()> muted_{};
  std::vector<LogEntry> entries_;
};

}  // namespace emsim
