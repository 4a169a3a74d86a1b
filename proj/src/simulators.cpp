#include "lsbo/simulators.hpp"

#include <cmath>
#include <stdexcept>

namespace lsbo {
namespace {

double arrhenius(double a, double e, double kelvin, double gas_r) {
  return a * std::exp(-e / (gas_r * kelvin));
}

// Final species of A -> B -> C. Written with expm1 so small rates keep
// precision; the equal-rate limit uses the confluent form.
double chain_final(double k1, double k2, double t) {
  double kmax = std::max(std::abs(k1), std::abs(k2));
  if (std::abs(k1 - k2) < 1e-9 * kmax) {
    double k = k1;
    return 1.0 - std::exp(-k * t) * (1.0 + k * t);
  }
  return -std::expm1(-k2 * t) +
         k2 / (k1 - k2) * std::exp(-k2 * t) * std::expm1(-(k1 - k2) * t);
}

// Intermediate of A -> C -> D.
double chain_intermediate(double k3, double k4, double t) {
  double kmax = std::max(std::abs(k3), std::abs(k4));
  if (std::abs(k3 - k4) < 1e-9 * kmax) {
    double k = k3;
    return k * t * std::exp(-k * t);
  }
  return k3 / (k4 - k3) * std::exp(-k3 * t) * (-std::expm1(-(k4 - k3) * t));
}

}  // namespace

double reactor_yield(int pathway, double kelvin, double seconds,
                     const ReactorParams& p) {
  if (pathway != 1 && pathway != 2)
    throw std::invalid_argument("reactor: pathway must be 1 or 2");
  if (!(kelvin > 0.0)) throw std::invalid_argument("reactor: temperature must be positive");
  if (!(seconds >= 0.0)) throw std::invalid_argument("reactor: time must be non-negative");
  if (pathway == 1) {
    double k1 = arrhenius(p.a1, p.e1, kelvin, p.gas_r);
    double k2 = arrhenius(p.a2, p.e2, kelvin, p.gas_r);
    return chain_final(k1, k2, seconds);
  }
  double k3 = arrhenius(p.a3, p.e3, kelvin, p.gas_r);
  double k4 = arrhenius(p.a4, p.e4, kelvin, p.gas_r);
  return chain_intermediate(k3, k4, seconds);
}

Simulator make_reactor_simulator(int arity, ReactorParams p) {
  if (arity != 1 && arity != 2)
    throw std::invalid_argument("reactor: arity must be 1 or 2");
  return [arity, p](const DesignSpace& space, const DesignPoint& pt) {
    SimOutcome out;
    try {
      std::size_t vp = space.find_var("pathway");
      std::size_t vt = space.find_var("temperature");
      std::size_t vs = space.find_var("time");
      int pathway = int(space.numeric_value(pt, vp));
      double kelvin = space.numeric_value(pt, vt);
      double seconds = space.numeric_value(pt, vs);
      double yield = reactor_yield(pathway, kelvin, seconds, p);
      out.f.push_back(-yield);
      if (arity == 2) out.f.push_back((kelvin - 300.0) * seconds);
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  };
}

DesignSpace toy_reactor_space() {
  static const char* text = R"({
    "variables": [
      {"name": "pathway", "kind": "categorical", "levels": [1, 2]},
      {"name": "temperature", "kind": "discretized-continuous",
       "lower": 300.0, "upper": 400.0, "num_levels": 25},
      {"name": "time", "kind": "discretized-continuous",
       "lower": 0.0, "upper": 600.0, "num_levels": 25}
    ]
  })";
  return DesignSpace::parse(text);
}

}  // namespace lsbo
