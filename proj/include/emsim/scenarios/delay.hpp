#pragma once

#include "emsim/kernel/simulation.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace emsim::scenarios {

struct Firing {
  char callback;  // 'f' or 'g'
  Time at;
};

struct DelayRun {
  std::vector<Firing> firings;
  RunOutcome outcome = RunOutcome::Exhausted;

  /// "f: 0", "g: 5/4", ... one per line.
  std::string render() const {
    std::string out;
    for (const auto& f : firings) out += std::string(1, f.callback) + ": " + f.at.display() + "\n";
    return out;
  }
};

/// `f` fires every time unit and also schedules `g` after a random rational
/// delay a/(b+1) with a, b drawn from {0,1,2,3}.
inline DelayRun run_delay(std::uint64_t seed, const Time& until = Time(2)) {
  Simulation sim(seed);
  auto run = std::make_shared<DelayRun>();
  auto g = [run](const Time& now) {
    return with_scheduling(now, [&](SchedulingContext&) { run->firings.push_back({'g', now}); });
  };
  auto f = std::make_shared<Callback>();
  *f = [run, g, &sim, weak = std::weak_ptr<Callback>(f)](const Time& now) {
    return with_scheduling(now, [&](SchedulingContext& ctx) {
      run->firings.push_back({'f', now});
      const auto a = static_cast<std::int64_t>(sim.rng()() % 4);
      const auto b = static_cast<std::int64_t>(sim.rng()() % 4);
      ctx.schedule(g, now + Time(a, b + 1), "g");
      ctx.schedule(*weak.lock(), now + Time(1), "f");
    });
  };
  sim.add_event(make_event(*f, Time(0), "f"));
  run->outcome = sim.run(canary_until(until));
  return *run;
}

}  // namespace emsim::scenarios
