// f fires at every integer time and schedules g a random rational delay later.
// Usage: demo_delay [seed]

#include "emsim/scenarios/delay.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const auto run = emsim::scenarios::run_delay(seed);
  std::cout << run.render();
  return 0;
}
