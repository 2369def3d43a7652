#pragma once

#include "emsim/kernel/time.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace emsim {

enum class TraceKind { BatchSend, RpcWait };

inline std::string_view to_string(TraceKind k) { return k == TraceKind::BatchSend ? "batch-send" : "rpc-wait"; }

struct TraceRecord {
  TraceKind kind = TraceKind::BatchSend;
  std::size_t target_count = 0;
  Time wait_duration{0};
  std::string initiator;
  Time at{0};
};

/// Opt-in performance statistics for interprocess queries.
class Tracer {
 public:
  bool enabled() const noexcept { return enabled_; }
  void set_enabled(bool on) noexcept { enabled_ = on; }

  void record(TraceRecord r) {
    if (enabled_) records_.push_back(std::move(r));
  }

  const std::vector<TraceRecord>& records() const noexcept { return records_; }

  std::vector<TraceRecord> of_kind(TraceKind k) const {
    std::vector<TraceRecord> out;
    for (const auto& r : records_)
      if (r.kind == k) out.push_back(r);
    return out;
  }

 private:
  bool enabled_ = false;
  std::vector<TraceRecord> records_;
};

}  // namespace emsim
