#pragma once

#include <cstdint>
#include <string>

#include "lsbo/simulators.hpp"

namespace lsbo {

struct ExternalSimOptions {
  std::string command;            // run through /bin/sh -c, one child per evaluation
  std::uint64_t timeout_ms = 30000;
};

// Wraps a command as a Simulator. Per evaluation the child receives one JSON
// line on stdin ({"variables": {name: value, ...}}) and must answer one JSON
// line on stdout ({"objectives": [...]} or {"error": "..."}). stderr passes
// through. On timeout the child's process group is killed. Failures carry a
// kind prefix: launch / timeout / malformed / child.
Simulator make_external_simulator(ExternalSimOptions opts);

}  // namespace lsbo
