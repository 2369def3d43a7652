// One GHS run on a random connected graph, then the per-type message counts.
// Usage: demo_ghs_report [nodes] [edges] [seed]

#include "emsim/scenarios/ghs.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>

using namespace emsim;
using namespace emsim::scenarios;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 10;
  const std::size_t m = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 17;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1;

  Rng rng(seed);
  const Graph g = random_connected_graph(n, m, rng);
  RunOptions o;
  o.seed = seed;
  auto run = run_ghs(g, o);
  if (run.violation) {
    std::cerr << "invariant violated: " << *run.violation << '\n';
    return 1;
  }

  std::cout << "tree edges:";
  std::int64_t weight = 0;
  for (const auto& e : run.branch_edges()) {
    std::cout << ' ' << e.u << '-' << e.v << '(' << e.weight << ')';
    weight += e.weight;
  }
  std::cout << "\ntotal weight " << weight << ", finished at t = " << run.world.sim->horizon().display() << "\n\n";
  std::cout << render_report(run.world.report());
  std::cout << "\n" << run.application_messages() << " algorithm messages, bound " << std::fixed
            << std::setprecision(2) << run.bound() << '\n';
  return run.terminated() ? 0 : 1;
}
