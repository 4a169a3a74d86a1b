#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsbo/rng.hpp"

namespace lsbo {

enum class Activation { linear, relu, tanh };

struct DenseLayer {
  std::size_t in = 0, out = 0;
  Activation act = Activation::linear;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
};

struct Network {
  std::vector<DenseLayer> layers;
  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out; }
};

// sizes = {in, hidden..., out}; acts has one entry per layer
Network make_mlp(const std::vector<std::size_t>& sizes,
                 const std::vector<Activation>& acts);

// Scaled-uniform init, bound sqrt(6/(in+out)), biases zero. Weights are drawn
// in layer order, row-major, so the stream position is reproducible.
void init_scaled_uniform(Network& net, Rng& rng);

struct Tape {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // per-layer pre-activation
  std::vector<std::vector<double>> post;  // per-layer activation
};

// Forward pass; records the tape when one is given.
std::vector<double> forward(const Network& net, std::span<const double> x,
                            Tape* tape = nullptr);

struct LayerGrads {
  std::vector<double> dw, db;
};

struct NetGrads {
  std::vector<LayerGrads> layers;
  void init_for(const Network& net);
  void zero();
};

struct BackpropScratch {
  std::vector<double> a, b;
};

// Reverse pass. Parameter gradients are ACCUMULATED into grads (callers zero
// them at batch start); the gradient wrt the network input lands in dinput
// when requested. The tape must come from a forward pass over the same
// network shape.
void backward_into(const Network& net, const Tape& tape,
                   std::span<const double> dout, NetGrads& grads,
                   BackpropScratch& scratch, std::vector<double>* dinput = nullptr);

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed set of parameter blocks. Block count and sizes are locked
// in on the first step; non-finite gradients are rejected.
class Adam {
 public:
  explicit Adam(AdamParams hp = {}) : hp_(hp) {}

  void step(std::span<double* const> params, std::span<const double* const> grads,
            std::span<const std::size_t> sizes);

  std::uint64_t steps() const { return t_; }
  const AdamParams& params() const { return hp_; }

 private:
  AdamParams hp_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace lsbo
