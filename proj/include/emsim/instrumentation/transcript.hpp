#pragma once

#include "emsim/kernel/simulation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace emsim {

/// Fingerprint of the executed event sequence: (time, event description)
/// for every event, in execution order. Two runs with equal fingerprints
/// made the same decisions in the same order.
class Transcript {
 public:
  explicit Transcript(bool keep_lines = false) : keep_lines_(keep_lines) {}

  void attach(Simulation& sim) {
    sim.set_observer([this](const Event& e) { record(e.time.str() + " " + e.describe()); });
  }

  void record(const std::string& line) {
    for (unsigned char c : line) mix(c);
    mix('\n');
    ++events_;
    if (keep_lines_) lines_.push_back(line);
  }

  std::uint64_t hash() const noexcept { return hash_; }
  std::uint64_t events() const noexcept { return events_; }
  const std::vector<std::string>& lines() const noexcept { return lines_; }

 private:
  void mix(unsigned char c) {
    hash_ ^= c;
    hash_ *= 0x100000001b3ULL;  // FNV-1a
  }

  bool keep_lines_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  std::uint64_t events_ = 0;
  std::vector<std::string> lines_;
};

}  // namespace emsim
