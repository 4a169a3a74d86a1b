#include "lsbo/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "lsbo/kernels.hpp"

namespace lsbo {

Network make_mlp(const std::vector<std::size_t>& sizes,
                 const std::vector<Activation>& acts) {
  if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least one layer");
  if (acts.size() != sizes.size() - 1)
    throw std::invalid_argument("make_mlp: one activation per layer required");
  Network net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.act = acts[l];
    layer.w.assign(layer.out * layer.in, 0.0);
    layer.b.assign(layer.out, 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void init_scaled_uniform(Network& net, Rng& rng) {
  for (auto& layer : net.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (auto& w : layer.w) w = (2.0 * rng.uniform01() - 1.0) * bound;
    for (auto& b : layer.b) b = 0.0;
  }
}

namespace {

void apply_activation(Activation act, const std::vector<double>& pre,
                      std::vector<double>& post) {
  post.resize(pre.size());
  switch (act) {
    case Activation::linear:
      post = pre;
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = std::tanh(pre[i]);
      break;
  }
}

}  // namespace

std::vector<double> forward(const Network& net, std::span<const double> x, Tape* tape) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (x.size() != net.input_size())
    throw std::invalid_argument("forward: input size mismatch");
  const auto& ops = kernels::active();

  if (tape) {
    tape->input.assign(x.begin(), x.end());
    tape->pre.resize(net.layers.size());
    tape->post.resize(net.layers.size());
  }

  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> pre;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    pre.resize(layer.out);
    ops.matvec(layer.w.data(), layer.out, layer.in, cur.data(), pre.data());
    for (std::size_t i = 0; i < layer.out; ++i) pre[i] += layer.b[i];
    std::vector<double> post;
    apply_activation(layer.act, pre, post);
    if (tape) {
      tape->pre[l] = pre;
      tape->post[l] = post;
    }
    cur = std::move(post);
  }
  return cur;
}

void NetGrads::init_for(const Network& net) {
  layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    layers[l].dw.assign(net.layers[l].w.size(), 0.0);
    layers[l].db.assign(net.layers[l].b.size(), 0.0);
  }
}

void NetGrads::zero() {
  for (auto& lg : layers) {
    lg.dw.assign(lg.dw.size(), 0.0);
    lg.db.assign(lg.db.size(), 0.0);
  }
}

void backward_into(const Network& net, const Tape& tape,
                   std::span<const double> dout, NetGrads& grads,
                   BackpropScratch& scratch, std::vector<double>* dinput) {
  const std::size_t nl = net.layers.size();
  if (tape.pre.size() != nl || tape.post.size() != nl ||
      tape.input.size() != net.input_size())
    throw std::invalid_argument("backward: tape does not match the network");
  for (std::size_t l = 0; l < nl; ++l)
    if (tape.pre[l].size() != net.layers[l].out)
      throw std::invalid_argument("backward: tape does not match the network");
  if (dout.size() != net.output_size())
    throw std::invalid_argument("backward: output gradient size mismatch");
  if (grads.layers.size() != nl) throw std::invalid_argument("backward: grads not initialized");

  const auto& ops = kernels::active();
  auto& g = scratch.a;
  auto& h = scratch.b;
  g.assign(dout.begin(), dout.end());

  for (std::size_t l = nl; l-- > 0;) {
    const auto& layer = net.layers[l];
    // through the activation: g becomes d(pre)
    switch (layer.act) {
      case Activation::linear:
        break;
      case Activation::relu:
        for (std::size_t i = 0; i < layer.out; ++i)
          if (tape.pre[l][i] <= 0.0) g[i] = 0.0;
        break;
      case Activation::tanh:
        for (std::size_t i = 0; i < layer.out; ++i) {
          const double y = tape.post[l][i];
          g[i] *= 1.0 - y * y;
        }
        break;
    }
    const double* layer_in = (l == 0) ? tape.input.data() : tape.post[l - 1].data();
    ops.outer_acc(grads.layers[l].dw.data(), g.data(), layer_in, layer.out, layer.in);
    ops.axpy(grads.layers[l].db.data(), 1.0, g.data(), layer.out);
    if (l > 0 || dinput != nullptr) {
      h.resize(layer.in);
      ops.matvec_t(layer.w.data(), layer.out, layer.in, g.data(), h.data());
      std::swap(g, h);
    }
  }
  if (dinput != nullptr) *dinput = g;
}

void Adam::step(std::span<double* const> params, std::span<const double* const> grads,
                std::span<const std::size_t> sizes) {
  if (params.size() != grads.size() || params.size() != sizes.size())
    throw std::invalid_argument("Adam::step: block count mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k].assign(sizes[k], 0.0);
      v_[k].assign(sizes[k], 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw std::invalid_argument("Adam::step: block count changed between steps");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (m_[k].size() != sizes[k])
      throw std::invalid_argument("Adam::step: block size changed between steps");
    for (std::size_t i = 0; i < sizes[k]; ++i)
      if (!std::isfinite(grads[k][i]))
        throw std::runtime_error("Adam::step: non-finite gradient");
  }
  ++t_;
  const double corr1 = 1.0 / (1.0 - std::pow(hp_.beta1, static_cast<double>(t_)));
  const double corr2 = 1.0 / (1.0 - std::pow(hp_.beta2, static_cast<double>(t_)));
  const auto& ops = kernels::active();
  for (std::size_t k = 0; k < params.size(); ++k)
    ops.adam_update(params[k], m_[k].data(), v_[k].data(), grads[k], sizes[k],
                    hp_.lr, hp_.beta1, hp_.beta2, hp_.eps, corr1, corr2);
}

}  // namespace lsbo
