#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lsbo/design_space.hpp"

namespace lsbo {

struct SimOutcome {
  bool ok = false;
  std::vector<double> f;  // objective values, minimized
  std::string error;
  std::uint64_t wall_ms = 0;
};

using Simulator = std::function<SimOutcome(const DesignSpace&, const DesignPoint&)>;

// Arrhenius rate constants for the two-pathway batch reactor. Pathway 1 runs
// A -> B -> C with the final species C as product; pathway 2 runs A -> C -> D
// where the product C is an intermediate that decays if left too long.
struct ReactorParams {
  double a1 = 1e6, e1 = 5.0e4;
  double a2 = 1e9, e2 = 9.2e4;
  double a3 = 1e10, e3 = 9.0e4;
  double a4 = 6e14, e4 = 1.3e5;
  double gas_r = 8.314;
};

// Product concentration C_C(t) for a unit feed of A at temperature kelvin.
double reactor_yield(int pathway, double kelvin, double seconds,
                     const ReactorParams& p = {});

// arity 1: f = {-yield}. arity 2: f = {-yield, (T - 300) * t}.
// In-process evaluations report wall_ms = 0 so repeated runs serialize
// identically.
Simulator make_reactor_simulator(int arity, ReactorParams p = {});

// pathway {1,2} x temperature [300,400] in 25 levels x time [0,600] in 25
// levels; 1250 points total.
DesignSpace toy_reactor_space();

}  // namespace lsbo
