#!/usr/bin/env python3
"""Reference external simulator for the JSON line protocol.

Reads one request line from stdin: {"variables": {name: value, ...}}.
Writes one reply line to stdout: {"objectives": [...]} or {"error": "..."}.

The default mode reproduces the built-in reactor model so external and
in-process campaigns can be cross-checked. Other modes exercise the failure
paths of the protocol:

  bi         two objectives (yield + energy proxy)
  error      well-formed error reply
  fail       exit nonzero without a reply
  malformed  non-JSON stdout
  empty      exit 0 with no output
  badcount   three objectives regardless of the request
  sleep S    reply after S seconds (timeout testing)
  noisy      chatter on stderr, then a valid reply
"""

import json
import math
import sys
import time

# Must stay numerically identical to the C++ reactor model.
A1, E1 = 1e6, 5.0e4
A2, E2 = 1e9, 9.2e4
A3, E3 = 1e10, 9.0e4
A4, E4 = 6e14, 1.3e5
GAS_R = 8.314


def arrhenius(a, e, kelvin):
    return a * math.exp(-e / (GAS_R * kelvin))


def chain_final(k1, k2, t):
    if abs(k1 - k2) < 1e-9 * max(abs(k1), abs(k2)):
        k = k1
        return 1.0 - math.exp(-k * t) * (1.0 + k * t)
    return -math.expm1(-k2 * t) + k2 / (k1 - k2) * math.exp(-k2 * t) * math.expm1(
        -(k1 - k2) * t
    )


def chain_intermediate(k3, k4, t):
    if abs(k3 - k4) < 1e-9 * max(abs(k3), abs(k4)):
        k = k3
        return k * t * math.exp(-k * t)
    return k3 / (k4 - k3) * math.exp(-k3 * t) * (-math.expm1(-(k4 - k3) * t))


def reactor_yield(pathway, kelvin, seconds):
    if pathway == 1:
        return chain_final(arrhenius(A1, E1, kelvin), arrhenius(A2, E2, kelvin), seconds)
    return chain_intermediate(
        arrhenius(A3, E3, kelvin), arrhenius(A4, E4, kelvin), seconds
    )


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "reactor"

    if mode == "fail":
        sys.exit(7)
    if mode == "malformed":
        print("this is not json")
        return
    if mode == "empty":
        return

    request = json.loads(sys.stdin.readline())
    variables = request["variables"]

    if mode == "sleep":
        time.sleep(float(sys.argv[2]))
        mode = "reactor"
    if mode == "error":
        print(json.dumps({"error": "deliberate failure"}))
        return
    if mode == "badcount":
        print(json.dumps({"objectives": [1.0, 2.0, 3.0]}))
        return
    if mode == "noisy":
        print("starting up", file=sys.stderr)
        mode = "reactor"

    pathway = int(variables["pathway"])
    kelvin = float(variables["temperature"])
    seconds = float(variables["time"])
    yield_c = reactor_yield(pathway, kelvin, seconds)
    objectives = [-yield_c]
    if mode == "bi":
        objectives.append((kelvin - 300.0) * seconds)
    print(json.dumps({"objectives": objectives}))


if __name__ == "__main__":
    main()
