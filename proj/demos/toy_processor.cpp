// Computes 5! on the toy CPU at two instructions per time unit, then
// prints the stack and where the clock stopped.

#include "emsim/scenarios/processor.hpp"

#include <iostream>

using namespace emsim;
using namespace emsim::scenarios;

int main() {
  Simulation sim;
  register_toy_processor(sim);
  auto cpu = std::make_shared<ToyProcessor>(
      std::vector<Instruction>{{Op::Push, 1}, {Op::Muli, 2}, {Op::Muli, 3}, {Op::Muli, 4}, {Op::Muli, 5}, {Op::Halt, 0}},
      Time(2));
  sim.add_event(make_event(cpu, Time(0)));
  sim.run();

  std::cout << "stack:";
  for (auto v : cpu->data_stack()) std::cout << ' ' << v;
  std::cout << "\npc: " << cpu->program_counter() << "\nhalted at t = " << sim.horizon().display() << '\n';
  return cpu->halted() ? 0 : 1;
}
