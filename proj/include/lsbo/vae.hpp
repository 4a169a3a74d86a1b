#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lsbo/design_space.hpp"
#include "lsbo/nn.hpp"

namespace lsbo {

struct VaeConfig {
  std::size_t latent_dim = 8;
  double beta = 0.05;  // KL weight
  std::size_t epochs = 2000;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::vector<std::size_t> encoder_hidden{64, 32};
  std::vector<std::size_t> decoder_hidden{32, 64};
};

// Embedding tables + encoder/decoder MLPs. The variable metadata travels with
// the model so decoding can materialize real points and checkpoints are
// self-describing.
struct VaeModel {
  DesignSpace space;
  std::size_t latent_dim = 0;
  double beta = 0.05;
  std::uint64_t train_seed = 0;
  std::vector<std::size_t> emb_dim;      // per variable: min(8, level count)
  std::vector<std::vector<double>> emb;  // per variable: levels x emb_dim, row-major
  Network encoder;                       // embed -> hidden -> 2*latent_dim linear
  Network decoder;                       // latent_dim -> hidden -> total levels linear

  std::size_t embed_size() const;
  std::size_t logit_size() const;
};

struct TrainingReport {
  struct EpochRow {
    double loss_rec, loss_kl, loss_total;
  };
  std::vector<EpochRow> epochs;
  double reconstruction_rate = 0.0;  // exact-match fraction over the dataset
};

struct SweepRow {
  std::size_t latent_dim;
  double loss_rec, loss_kl, loss_total, reconstruction_rate;
};

// Stable loss pieces (softmax cross-entropy per variable via log-sum-exp; the
// Gaussian-vs-standard-normal divergence in closed form).
double loss_rec(const VaeModel& model, std::span<const double> logits,
                const DesignPoint& p);
double loss_kl(std::span<const double> mu, std::span<const double> logvar);

// One full differentiable pass with the noise vector made explicit, so tests
// can freeze it and finite-difference the composite loss.
struct VaeForward {
  std::vector<double> h, mu, logvar, z, logits;
  Tape enc_tape, dec_tape;
  double rec = 0.0, kl = 0.0, loss = 0.0;
};
void vae_forward(const VaeModel& model, const DesignPoint& p,
                 std::span<const double> eps, VaeForward& out);

struct VaeGrads {
  std::vector<std::vector<double>> demb;
  NetGrads denc, ddec;
  void init_for(const VaeModel& model);
  void zero();
  void scale(double s);
};
struct VaeScratch {
  BackpropScratch bp;
  std::vector<double> dlogits, dz, denc_out;
};
// Accumulates into grads.
void vae_backward(const VaeModel& model, const DesignPoint& p,
                  std::span<const double> eps, const VaeForward& fwd,
                  VaeGrads& grads, VaeScratch& scratch);

// Training dataset for a space: the full grid when the cardinality is at most
// 100000, otherwise a uniform sample of 100000 points.
std::vector<DesignPoint> training_dataset(const DesignSpace& space, std::uint64_t seed);

// Architecture + scaled-uniform init from the config seed.
VaeModel make_vae(const DesignSpace& space, const VaeConfig& cfg);

// Minibatch Adam over the dataset. Deterministic per seed: the shuffle and
// noise streams are split from cfg.seed, so runs with equal shapes replay
// the same data order. Throws on divergence (non-finite loss).
TrainingReport train_vae(VaeModel& model, std::span<const DesignPoint> data,
                         const VaeConfig& cfg);

std::pair<VaeModel, TrainingReport> train_vae_on_space(const DesignSpace& space,
                                                       const VaeConfig& cfg);

std::vector<double> encode_mean(const VaeModel& model, const DesignPoint& p);

// Greedy per-variable argmax; ties resolve to the lower index. Total: every
// finite z decodes to some grid point.
DesignPoint decode(const VaeModel& model, std::span<const double> z);

double reconstruction_rate(const VaeModel& model, std::span<const DesignPoint> data);

// One full training per dimension, all from the same seed (identical data
// order), reporting final-epoch losses and the exact-reconstruction rate.
std::vector<SweepRow> latent_dim_sweep(const DesignSpace& space,
                                       std::span<const std::size_t> dims,
                                       const VaeConfig& base_cfg);

}  // namespace lsbo
