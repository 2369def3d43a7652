#pragma once

#include "emsim/instrumentation/log.hpp"
#include "emsim/kernel/simulation.hpp"
#include "emsim/network/message.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace emsim {

/// Emits a user entry (or any other kind) stamped with the current horizon.
inline void log_entry(Simulation& sim, std::string source, Attributes attrs = {}, EntryKind kind = EntryKind::User) {
  sim.log().append(sim.horizon(), std::move(source), kind, std::move(attrs));
}

struct ReportOptions {
  bool include_rpc_done = true;
  bool include_returns = true;
  bool include_self_sends = false;  // deferral idioms that re-send to one's own inbox
};

struct MessageReport {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;

  std::uint64_t count(const std::string& type) const {
    auto it = counts.find(type);
    return it == counts.end() ? 0 : it->second;
  }
};

/// Tallies message-sent entries by message type.
inline MessageReport message_report(const Log& log, ReportOptions options = {}) {
  MessageReport r;
  for (const auto& e : log.entries()) {
    if (e.kind != EntryKind::MessageSent) continue;
    const std::string type(e.attr("type"));
    if (!options.include_rpc_done && type == RpcDone::kType) continue;
    if (!options.include_returns && type == ReturnToSender::kType) continue;
    if (!options.include_self_sends && e.has_attr("to-self")) continue;
    ++r.counts[type];
    ++r.total;
  }
  return r;
}

/// "TYPE: count" lines, busiest first (ties by name), then "TOTAL: n".
inline std::string render_report(const MessageReport& r) {
  std::vector<std::pair<std::string, std::uint64_t>> rows(r.counts.begin(), r.counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t width = 6;  // "TOTAL:"
  for (const auto& [name, n] : rows) width = std::max(width, name.size() + 1);
  std::ostringstream os;
  auto line = [&](const std::string& label, std::uint64_t n) {
    os << label << std::string(width - label.size() + 1, ' ') << n << '\n';
  };
  for (const auto& [name, n] : rows) line(name + ":", n);
  line("TOTAL:", r.total);
  return os.str();
}

}  // namespace emsim
