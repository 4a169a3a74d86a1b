#include "lsbo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsbo {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

void validate_config(const CampaignConfig& cfg) {
  if (cfg.arity != 1 && cfg.arity != 2)
    throw std::invalid_argument("campaign: arity must be 1 or 2");
  if (cfg.init_count < 2)
    throw std::invalid_argument("campaign: init_count must be at least 2");
  if (cfg.candidates < 1)
    throw std::invalid_argument("campaign: candidates must be positive");
  if (cfg.vae.latent_dim < 1)
    throw std::invalid_argument("campaign: latent_dim must be positive");
}

std::vector<std::vector<double>> draw_candidates(std::size_t m, std::size_t d,
                                                 Rng& rng) {
  std::vector<std::vector<double>> zs(m);
  for (std::size_t j = 0; j < m; ++j) {
    zs[j].resize(d);
    for (std::size_t k = 0; k < d; ++k) zs[j][k] = rng.normal();
  }
  return zs;
}

Proposal pick_first_unseen(const std::vector<std::vector<double>>& zs,
                           const std::vector<DesignPoint>& xs,
                           const std::vector<std::size_t>& ranking,
                           const std::vector<double>& scores,
                           const DesignSpace& space,
                           const std::unordered_set<std::uint64_t>& seen) {
  for (std::size_t idx : ranking) {
    if (!seen.count(space.flat_index(xs[idx])))
      return {zs[idx], xs[idx], scores[idx], false};
  }
  std::size_t top = ranking.front();
  return {zs[top], xs[top], scores[top], true};
}

// A candidate is evaluated at the design it decodes to, so its score is
// taken at that design's canonical embedding. The surrogate is trained on
// those embeddings; raw prior draws would be queried off the data manifold,
// and every candidate decoding to the same design must tie.
std::vector<DesignPoint> decode_all(const VaeModel& vae,
                                    const std::vector<std::vector<double>>& zs,
                                    std::vector<std::vector<double>>& anchors) {
  std::vector<DesignPoint> xs(zs.size());
  anchors.resize(zs.size());
  for (std::size_t j = 0; j < zs.size(); ++j) {
    xs[j] = decode(vae, zs[j]);
    anchors[j] = encode_mean(vae, xs[j]);
  }
  return xs;
}

}  // namespace

double expected_improvement(double mean, double stddev, double best) {
  double gap = best - mean;
  if (!(stddev > 0.0)) return gap > 0.0 ? gap : 0.0;
  double u = gap / stddev;
  double cdf = 0.5 * std::erfc(-u * kInvSqrt2);
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * u * u);
  double ei = gap * cdf + stddev * pdf;
  return ei > 0.0 ? ei : 0.0;
}

Proposal propose_single(const VaeModel& vae, const GpModel& gp, double best_f,
                        const std::unordered_set<std::uint64_t>& seen,
                        std::size_t m, Rng& rng) {
  auto zs = draw_candidates(m, vae.latent_dim, rng);
  std::vector<std::vector<double>> anchors;
  std::vector<DesignPoint> xs = decode_all(vae, zs, anchors);
  std::vector<double> ei(m);
  for (std::size_t j = 0; j < m; ++j) {
    GpPrediction p = gp_predict(gp, anchors[j]);
    ei[j] = expected_improvement(p.mean, p.stddev_f, best_f);
  }
  std::vector<std::size_t> ranking(m);
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });
  return pick_first_unseen(zs, xs, ranking, ei, vae.space, seen);
}

Proposal propose_pareto(const VaeModel& vae, const GpModel& gp1,
                        const GpModel& gp2,
                        const std::unordered_set<std::uint64_t>& seen,
                        std::size_t m, Rng& rng) {
  auto zs = draw_candidates(m, vae.latent_dim, rng);
  std::vector<std::vector<double>> anchors;
  std::vector<DesignPoint> xs = decode_all(vae, zs, anchors);
  std::vector<Point2> means(m);
  std::vector<double> score(m);
  for (std::size_t j = 0; j < m; ++j) {
    GpPrediction p1 = gp_predict(gp1, anchors[j]);
    GpPrediction p2 = gp_predict(gp2, anchors[j]);
    means[j] = {p1.mean, p2.mean};
    score[j] = p1.stddev_f / gp1.t_scale + p2.stddev_f / gp2.t_scale;
  }
  std::vector<std::size_t> nd = non_dominated(means);
  std::vector<char> on_front(m, 0);
  for (std::size_t idx : nd) on_front[idx] = 1;
  std::vector<std::size_t> ranking(m);
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (on_front[a] != on_front[b]) return on_front[a] > on_front[b];
                     return score[a] > score[b];
                   });
  return pick_first_unseen(zs, xs, ranking, score, vae.space, seen);
}

std::size_t CampaignState::init_done() const {
  std::size_t n = 0;
  for (const EvalRecord& r : records)
    if (r.iteration == 0) ++n;
  return n;
}

std::size_t CampaignState::iterations_done() const {
  return records.size() - init_done();
}

std::size_t CampaignState::best_index() const {
  if (records.empty()) throw std::logic_error("campaign: no evaluations yet");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].f[0] < records[best].f[0]) best = i;
  return best;
}

std::vector<std::size_t> CampaignState::front_indices() const {
  if (records.empty()) throw std::logic_error("campaign: no evaluations yet");
  if (cfg.arity == 1) return {best_index()};
  std::vector<Point2> pts(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    pts[i] = {records[i].f[0], records[i].f[1]};
  return non_dominated(pts);
}

namespace {

// Runs one simulator call and appends the record on success. Returns false on
// failure after logging it; `it` is the iteration number being attempted.
bool attempt_eval(const VaeModel& vae, CampaignState& st, const Simulator& sim,
                  const DesignPoint& x, std::uint32_t it, double acq,
                  bool has_acq, bool fallback, const EvalCallback& cb) {
  SimOutcome out = sim(vae.space, x);
  std::string reason;
  if (!out.ok) {
    reason = out.error.empty() ? "simulator failed" : out.error;
  } else if (out.f.size() != std::size_t(st.cfg.arity)) {
    reason = "simulator returned wrong objective count";
  } else {
    for (double v : out.f)
      if (!std::isfinite(v)) reason = "simulator returned non-finite objective";
  }
  if (!reason.empty()) {
    st.failures.push_back({it, std::move(reason)});
    return false;
  }
  EvalRecord rec;
  rec.x = x;
  rec.z = encode_mean(vae, x);
  rec.f = std::move(out.f);
  rec.acq = acq;
  rec.has_acq = has_acq;
  rec.fallback = fallback;
  rec.wall_ms = out.wall_ms;
  rec.iteration = it;
  st.records.push_back(std::move(rec));
  if (cb) cb(st);
  return true;
}

void abort_campaign(CampaignState& st) {
  st.aborted = true;
  st.abort_reason = st.failures.empty() ? "simulator failed"
                                        : st.failures.back().reason;
}

// Drives the campaign forward until init_count + budget successful
// evaluations or an abort. Used by both fresh runs and resumes.
void advance(const VaeModel& vae, CampaignState& st, const Simulator& sim,
             const EvalCallback& cb) {
  int consecutive = 0;
  while (st.init_done() < st.cfg.init_count) {
    DesignPoint p = vae.space.sample_uniform(st.init_rng);
    if (attempt_eval(vae, st, sim, p, 0, 0.0, false, false, cb)) {
      consecutive = 0;
    } else if (++consecutive > 3) {
      abort_campaign(st);
      return;
    }
  }

  std::unordered_set<std::uint64_t> seen;
  for (const EvalRecord& r : st.records) seen.insert(vae.space.flat_index(r.x));

  while (st.iterations_done() < st.cfg.budget) {
    const std::size_t n = st.records.size();
    const std::size_t d = vae.latent_dim;
    std::vector<double> xs(n * d);
    for (std::size_t i = 0; i < n; ++i)
      std::copy(st.records[i].z.begin(), st.records[i].z.end(),
                xs.begin() + i * d);

    Proposal prop;
    if (st.cfg.arity == 1) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = st.records[i].f[0];
      GpModel gp = gp_fit(xs, n, d, y);
      double best = y[st.best_index()];
      prop = propose_single(vae, gp, best, seen, st.cfg.candidates, st.cand_rng);
    } else {
      std::vector<double> y1(n), y2(n);
      for (std::size_t i = 0; i < n; ++i) {
        y1[i] = st.records[i].f[0];
        y2[i] = st.records[i].f[1];
      }
      GpModel g1 = gp_fit(xs, n, d, y1);
      GpModel g2 = gp_fit(xs, n, d, y2);
      prop = propose_pareto(vae, g1, g2, seen, st.cfg.candidates, st.cand_rng);
    }

    std::uint32_t it = std::uint32_t(st.iterations_done()) + 1;
    if (attempt_eval(vae, st, sim, prop.x, it, prop.score, true, prop.fallback,
                     cb)) {
      consecutive = 0;
      seen.insert(vae.space.flat_index(prop.x));
    } else if (++consecutive > 3) {
      abort_campaign(st);
      return;
    }
  }
}

}  // namespace

Campaign run_campaign(const DesignSpace& space, const Simulator& sim,
                      const CampaignConfig& cfg, const EvalCallback& cb,
                      const ModelCallback& on_model) {
  validate_config(cfg);
  Campaign c;
  c.state.cfg = cfg;
  c.state.init_rng = Rng(Rng::stream_seed(cfg.seed, "campaign/init"));
  c.state.cand_rng = Rng(Rng::stream_seed(cfg.seed, "campaign/cand"));
  VaeConfig vcfg = cfg.vae;
  vcfg.seed = Rng::stream_seed(cfg.seed, "campaign/vae");
  c.vae = train_vae_on_space(space, vcfg).first;
  if (on_model) on_model(c.vae);
  advance(c.vae, c.state, sim, cb);
  return c;
}

void continue_campaign(const VaeModel& vae, CampaignState& state,
                       const Simulator& sim, std::size_t extra_budget,
                       const EvalCallback& cb) {
  if (vae.latent_dim != state.cfg.vae.latent_dim)
    throw std::invalid_argument("campaign: model latent size does not match state");
  state.aborted = false;
  state.abort_reason.clear();
  state.cfg.budget += extra_budget;
  advance(vae, state, sim, cb);
}

}  // namespace lsbo
