#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "lsbo/gp.hpp"
#include "lsbo/pareto.hpp"
#include "lsbo/rng.hpp"
#include "lsbo/simulators.hpp"
#include "lsbo/vae.hpp"

namespace lsbo {

// EI for minimization given the best observed value. stddev <= 0 collapses
// to max(best - mean, 0).
double expected_improvement(double mean, double stddev, double best);

struct EvalRecord {
  DesignPoint x;
  std::vector<double> z;  // encode_mean of x under the campaign VAE
  std::vector<double> f;
  double acq = 0.0;       // acquisition score of the chosen proposal
  bool has_acq = false;   // false for initial-design rows
  bool fallback = false;  // proposal was a forced duplicate
  std::uint64_t wall_ms = 0;
  std::uint32_t iteration = 0;  // 0 for the initial design, then 1-based
};

struct FailureRecord {
  std::uint32_t iteration = 0;  // iteration being attempted (0 = initial design)
  std::string reason;
};

struct CampaignConfig {
  int arity = 1;  // 1 or 2
  std::size_t init_count = 10;
  std::size_t budget = 50;      // successful optimization evaluations
  std::size_t candidates = 2048;
  std::uint64_t seed = 0;
  VaeConfig vae;  // vae.seed is ignored; it derives from the campaign seed
};

struct CampaignState {
  CampaignConfig cfg;
  std::vector<EvalRecord> records;
  std::vector<FailureRecord> failures;
  Rng init_rng{0};
  Rng cand_rng{0};
  bool aborted = false;
  std::string abort_reason;

  std::size_t init_done() const;
  std::size_t iterations_done() const;
  std::size_t best_index() const;                  // min f[0], first on ties
  std::vector<std::size_t> front_indices() const;  // non-dominated records
};

struct Proposal {
  std::vector<double> z;  // sampled latent candidate
  DesignPoint x;          // its decoded design
  double score = 0.0;
  bool fallback = false;
};

// Draws m candidates from N(0, I), ranks them by EI under gp, and returns the
// best-ranked candidate whose decoded design is not in seen. If every
// candidate decodes to a seen design the top one is returned flagged.
Proposal propose_single(const VaeModel& vae, const GpModel& gp, double best_f,
                        const std::unordered_set<std::uint64_t>& seen,
                        std::size_t m, Rng& rng);

// Bi-objective proposal: candidates whose predicted means are non-dominated
// within the batch are preferred, ranked by the sum of standardized
// predictive stddevs; remaining candidates follow in the same order.
Proposal propose_pareto(const VaeModel& vae, const GpModel& gp1,
                        const GpModel& gp2,
                        const std::unordered_set<std::uint64_t>& seen,
                        std::size_t m, Rng& rng);

struct Campaign {
  VaeModel vae;
  CampaignState state;
};

using EvalCallback = std::function<void(const CampaignState&)>;
using ModelCallback = std::function<void(const VaeModel&)>;

// Trains the representation, runs the initial design, then optimizes until
// cfg.budget successful evaluations. on_model fires once after training,
// before any evaluation; cb fires after every successful evaluation. Four
// consecutive simulator failures abort the campaign with partial results
// (state.aborted is set rather than throwing).
Campaign run_campaign(const DesignSpace& space, const Simulator& sim,
                      const CampaignConfig& cfg, const EvalCallback& cb = {},
                      const ModelCallback& on_model = {});

// Resumes a loaded state against the model it was created with, adding
// extra_budget more successful evaluations. Clears a previous abort flag.
void continue_campaign(const VaeModel& vae, CampaignState& state,
                       const Simulator& sim, std::size_t extra_budget,
                       const EvalCallback& cb = {});

}  // namespace lsbo
