#include "lsbo/vae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsbo/kernels.hpp"

namespace lsbo {

std::size_t VaeModel::embed_size() const {
  std::size_t s = 0;
  for (auto e : emb_dim) s += e;
  return s;
}

std::size_t VaeModel::logit_size() const {
  std::size_t s = 0;
  for (const auto& v : space.vars()) s += v.levels.size();
  return s;
}

double loss_rec(const VaeModel& model, std::span<const double> logits,
                const DesignPoint& p) {
  if (logits.size() != model.logit_size())
    throw std::invalid_argument("loss_rec: logit size mismatch");
  double total = 0.0;
  std::size_t off = 0;
  for (std::size_t n = 0; n < model.space.num_vars(); ++n) {
    const std::size_t c = model.space.var(n).levels.size();
    double mx = logits[off];
    for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, logits[off + i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < c; ++i) sum += std::exp(logits[off + i] - mx);
    const double lse = mx + std::log(sum);
    total += lse - logits[off + p.indices.at(n)];
    off += c;
  }
  return total;
}

double loss_kl(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size())
    throw std::invalid_argument("loss_kl: mu/logvar size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j)
    s += std::exp(logvar[j]) + mu[j] * mu[j] - logvar[j] - 1.0;
  return 0.5 * s;
}

namespace {

void build_embedding(const VaeModel& model, const DesignPoint& p,
                     std::vector<double>& h) {
  h.resize(model.embed_size());
  std::size_t off = 0;
  for (std::size_t n = 0; n < model.emb.size(); ++n) {
    const std::size_t e = model.emb_dim[n];
    const double* row = model.emb[n].data() + p.indices.at(n) * e;
    std::copy(row, row + e, h.begin() + off);
    off += e;
  }
}

}  // namespace

void vae_forward(const VaeModel& model, const DesignPoint& p,
                 std::span<const double> eps, VaeForward& out) {
  const std::size_t d = model.latent_dim;
  if (eps.size() != d) throw std::invalid_argument("vae_forward: eps size mismatch");
  build_embedding(model, p, out.h);
  const auto enc_out = forward(model.encoder, out.h, &out.enc_tape);
  out.mu.assign(enc_out.begin(), enc_out.begin() + d);
  out.logvar.assign(enc_out.begin() + d, enc_out.end());
  out.z.resize(d);
  for (std::size_t j = 0; j < d; ++j)
    out.z[j] = out.mu[j] + eps[j] * std::exp(0.5 * out.logvar[j]);
  out.logits = forward(model.decoder, out.z, &out.dec_tape);
  out.rec = loss_rec(model, out.logits, p);
  out.kl = loss_kl(out.mu, out.logvar);
  out.loss = out.rec + model.beta * out.kl;
}

void VaeGrads::init_for(const VaeModel& model) {
  demb.resize(model.emb.size());
  for (std::size_t n = 0; n < model.emb.size(); ++n) demb[n].assign(model.emb[n].size(), 0.0);
  denc.init_for(model.encoder);
  ddec.init_for(model.decoder);
}

void VaeGrads::zero() {
  for (auto& t : demb) t.assign(t.size(), 0.0);
  denc.zero();
  ddec.zero();
}

void VaeGrads::scale(double s) {
  for (auto& t : demb)
    for (auto& x : t) x *= s;
  for (auto* ng : {&denc, &ddec})
    for (auto& lg : ng->layers) {
      for (auto& x : lg.dw) x *= s;
      for (auto& x : lg.db) x *= s;
    }
}

void vae_backward(const VaeModel& model, const DesignPoint& p,
                  std::span<const double> eps, const VaeForward& fwd,
                  VaeGrads& grads, VaeScratch& scratch) {
  const std::size_t d = model.latent_dim;

  // d(loss_rec)/d(logits): per-variable softmax minus one-hot
  auto& dlogits = scratch.dlogits;
  dlogits.resize(fwd.logits.size());
  std::size_t off = 0;
  for (std::size_t n = 0; n < model.space.num_vars(); ++n) {
    const std::size_t c = model.space.var(n).levels.size();
    double mx = fwd.logits[off];
    for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, fwd.logits[off + i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < c; ++i) sum += std::exp(fwd.logits[off + i] - mx);
    for (std::size_t i = 0; i < c; ++i)
      dlogits[off + i] = std::exp(fwd.logits[off + i] - mx) / sum;
    dlogits[off + p.indices.at(n)] -= 1.0;
    off += c;
  }

  backward_into(model.decoder, fwd.dec_tape, dlogits, grads.ddec, scratch.bp, &scratch.dz);

  // through the reparameterization plus the KL term
  auto& denc_out = scratch.denc_out;
  denc_out.resize(2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    const double dz = scratch.dz[j];
    denc_out[j] = dz + model.beta * fwd.mu[j];
    denc_out[d + j] = dz * eps[j] * 0.5 * std::exp(0.5 * fwd.logvar[j]) +
                      model.beta * 0.5 * (std::exp(fwd.logvar[j]) - 1.0);
  }

  std::vector<double> dh;
  backward_into(model.encoder, fwd.enc_tape, denc_out, grads.denc, scratch.bp, &dh);

  std::size_t hoff = 0;
  for (std::size_t n = 0; n < model.emb.size(); ++n) {
    const std::size_t e = model.emb_dim[n];
    double* row = grads.demb[n].data() + p.indices.at(n) * e;
    for (std::size_t k = 0; k < e; ++k) row[k] += dh[hoff + k];
    hoff += e;
  }
}

std::vector<DesignPoint> training_dataset(const DesignSpace& space, std::uint64_t seed) {
  constexpr std::uint64_t kEnumerationCap = 100000;
  std::vector<DesignPoint> data;
  if (space.cardinality() <= kEnumerationCap) {
    data.reserve(space.cardinality());
    for (std::uint64_t f = 0; f < space.cardinality(); ++f)
      data.push_back(space.point_from_flat(f));
  } else {
    Rng rng = Rng::stream(seed, "vae/dataset");
    data.reserve(kEnumerationCap);
    for (std::uint64_t i = 0; i < kEnumerationCap; ++i)
      data.push_back(space.sample_uniform(rng));
  }
  return data;
}

VaeModel make_vae(const DesignSpace& space, const VaeConfig& cfg) {
  if (cfg.latent_dim == 0) throw std::invalid_argument("make_vae: latent_dim must be positive");
  VaeModel model;
  model.space = space;
  model.latent_dim = cfg.latent_dim;
  model.beta = cfg.beta;
  model.train_seed = cfg.seed;

  Rng rng = Rng::stream(cfg.seed, "vae/init");
  for (const auto& v : space.vars()) {
    const std::size_t c = v.levels.size();
    const std::size_t e = std::min<std::size_t>(8, c);
    model.emb_dim.push_back(e);
    std::vector<double> table(c * e);
    const double bound = std::sqrt(6.0 / static_cast<double>(c + e));
    if (v.kind == VarKind::categorical || c < 2) {
      for (auto& w : table) w = (2.0 * rng.uniform01() - 1.0) * bound;
    } else {
      // Ordered variables start on a noisy half-turn arc in a random plane:
      // row l = cos(a_l) u + sin(a_l) v + noise, with a_l the level value
      // mapped to [-pi/2, pi/2]. The training loss is invariant under level
      // permutations, so only the start decides whether neighboring levels
      // stay neighbors in the latent space; the surrogate needs them to.
      // An arc rather than a straight ramp: its row-to-row geometry depends
      // only on the level gap, so no point along it is predisposed to tear
      // when training stretches the layout. The arc also runs hotter than a
      // standard init: the encoder must see the levels as already separated
      // at the starting noise scale, or the first epochs scatter them in an
      // order-blind way that no later epoch undoes. The noise must stay
      // below the per-level step or adjacent levels begin, and stay,
      // shuffled.
      double lo = v.levels[0].number(), hi = lo;
      for (const auto& lv : v.levels) {
        lo = std::min(lo, lv.number());
        hi = std::max(hi, lv.number());
      }
      const double span = hi > lo ? hi - lo : 1.0;
      std::vector<double> u(e), w(e);
      for (auto& d : u) d = (2.0 * rng.uniform01() - 1.0) * 3.0 * bound;
      for (auto& d : w) d = (2.0 * rng.uniform01() - 1.0) * 3.0 * bound;
      const double half_pi = 2.0 * std::atan(1.0);
      for (std::size_t l = 0; l < c; ++l) {
        const double s = 2.0 * (v.levels[l].number() - lo) / span - 1.0;
        const double ca = std::cos(half_pi * s), sa = std::sin(half_pi * s);
        for (std::size_t j = 0; j < e; ++j)
          table[l * e + j] = ca * u[j] + sa * w[j] +
                             0.05 * (2.0 * rng.uniform01() - 1.0) * bound;
      }
    }
    model.emb.push_back(std::move(table));
  }

  std::vector<std::size_t> enc_sizes{model.embed_size()};
  enc_sizes.insert(enc_sizes.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
  enc_sizes.push_back(2 * cfg.latent_dim);
  std::vector<Activation> enc_acts(cfg.encoder_hidden.size(), Activation::relu);
  enc_acts.push_back(Activation::linear);
  model.encoder = make_mlp(enc_sizes, enc_acts);
  init_scaled_uniform(model.encoder, rng);

  std::vector<std::size_t> dec_sizes{cfg.latent_dim};
  dec_sizes.insert(dec_sizes.end(), cfg.decoder_hidden.begin(), cfg.decoder_hidden.end());
  dec_sizes.push_back(model.logit_size());
  std::vector<Activation> dec_acts(cfg.decoder_hidden.size(), Activation::relu);
  dec_acts.push_back(Activation::linear);
  model.decoder = make_mlp(dec_sizes, dec_acts);
  init_scaled_uniform(model.decoder, rng);

  return model;
}

namespace {

// Parameter blocks in a pinned order: embedding tables, then encoder layers,
// then decoder layers, weights before biases.
struct ParamView {
  std::vector<double*> params;
  std::vector<const double*> grads;
  std::vector<std::size_t> sizes;
};

ParamView collect_params(VaeModel& model, VaeGrads& grads) {
  ParamView pv;
  for (std::size_t n = 0; n < model.emb.size(); ++n) {
    pv.params.push_back(model.emb[n].data());
    pv.grads.push_back(grads.demb[n].data());
    pv.sizes.push_back(model.emb[n].size());
  }
  auto add_net = [&](Network& net, NetGrads& ng) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      pv.params.push_back(net.layers[l].w.data());
      pv.grads.push_back(ng.layers[l].dw.data());
      pv.sizes.push_back(net.layers[l].w.size());
      pv.params.push_back(net.layers[l].b.data());
      pv.grads.push_back(ng.layers[l].db.data());
      pv.sizes.push_back(net.layers[l].b.size());
    }
  };
  add_net(model.encoder, grads.denc);
  add_net(model.decoder, grads.ddec);
  return pv;
}

}  // namespace

TrainingReport train_vae(VaeModel& model, std::span<const DesignPoint> data,
                         const VaeConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train_vae: empty dataset");
  if (cfg.batch == 0) throw std::invalid_argument("train_vae: batch must be positive");

  Rng rng_shuffle = Rng::stream(cfg.seed, "vae/shuffle");
  Rng rng_noise = Rng::stream(cfg.seed, "vae/noise");

  VaeGrads grads;
  grads.init_for(model);
  Adam adam(AdamParams{.lr = cfg.lr});
  VaeForward fwd;
  VaeScratch scratch;
  std::vector<double> eps(model.latent_dim);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainingReport report;
  report.epochs.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates from the tail, pinned draw order
    for (std::size_t i = order.size(); i-- > 1;) {
      const std::size_t j = rng_shuffle.uniform_below(i + 1);
      std::swap(order[i], order[j]);
    }
    double epoch_rec = 0.0, epoch_kl = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t bsz = std::min(cfg.batch, order.size() - start);
      grads.zero();
      for (std::size_t k = 0; k < bsz; ++k) {
        const DesignPoint& p = data[order[start + k]];
        for (auto& e : eps) e = rng_noise.normal();
        vae_forward(model, p, eps, fwd);
        if (!std::isfinite(fwd.loss))
          throw std::runtime_error("train_vae: loss diverged at epoch " +
                                   std::to_string(epoch));
        epoch_rec += fwd.rec;
        epoch_kl += fwd.kl;
        vae_backward(model, p, eps, fwd, grads, scratch);
      }
      grads.scale(1.0 / static_cast<double>(bsz));
      auto pv = collect_params(model, grads);
      adam.step(pv.params, pv.grads, pv.sizes);
    }
    const double n = static_cast<double>(data.size());
    const double rec = epoch_rec / n, kl = epoch_kl / n;
    report.epochs.push_back({rec, kl, rec + model.beta * kl});
  }
  report.reconstruction_rate = reconstruction_rate(model, data);
  return report;
}

std::pair<VaeModel, TrainingReport> train_vae_on_space(const DesignSpace& space,
                                                       const VaeConfig& cfg) {
  auto data = training_dataset(space, cfg.seed);
  VaeModel model = make_vae(space, cfg);
  TrainingReport report = train_vae(model, data, cfg);
  return {std::move(model), std::move(report)};
}

std::vector<double> encode_mean(const VaeModel& model, const DesignPoint& p) {
  std::vector<double> h;
  build_embedding(model, p, h);
  auto out = forward(model.encoder, h);
  return std::vector<double>(out.begin(), out.begin() + model.latent_dim);
}

DesignPoint decode(const VaeModel& model, std::span<const double> z) {
  if (z.size() != model.latent_dim)
    throw std::invalid_argument("decode: latent size mismatch");
  const auto logits = forward(model.decoder, z);
  DesignPoint p;
  p.indices.reserve(model.space.num_vars());
  std::size_t off = 0;
  for (std::size_t n = 0; n < model.space.num_vars(); ++n) {
    const std::size_t c = model.space.var(n).levels.size();
    std::size_t best = 0;
    for (std::size_t i = 1; i < c; ++i)
      if (logits[off + i] > logits[off + best]) best = i;
    p.indices.push_back(best);
    off += c;
  }
  return p;
}

double reconstruction_rate(const VaeModel& model, std::span<const DesignPoint> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : data)
    if (decode(model, encode_mean(model, p)) == p) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::vector<SweepRow> latent_dim_sweep(const DesignSpace& space,
                                       std::span<const std::size_t> dims,
                                       const VaeConfig& base_cfg) {
  std::vector<SweepRow> rows;
  for (auto d : dims) {
    VaeConfig cfg = base_cfg;
    cfg.latent_dim = d;
    auto [model, report] = train_vae_on_space(space, cfg);
    const auto& last = report.epochs.back();
    rows.push_back({d, last.loss_rec, last.loss_kl, last.loss_total,
                    report.reconstruction_rate});
  }
  return rows;
}

}  // namespace lsbo
