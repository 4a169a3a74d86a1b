#pragma once

#include <optional>
#include <span>
#include <vector>

namespace lsbo {

struct GpHyper {
  double length_scale = 1.0;
  double signal_var = 1.0;
  double noise = 1e-6;
};

struct GpFitOptions {
  // When set, skips model selection and fits exactly these hyperparameters
  // (targets are still standardized; values are in standardized units).
  std::optional<GpHyper> fixed;
};

// Squared-exponential GP with one shared length scale. Targets are
// standardized internally; predictions are returned in original units.
struct GpModel {
  std::size_t n = 0, d = 0;
  std::vector<double> x;      // n x d row-major
  std::vector<double> y_std;  // standardized targets
  double t_mean = 0.0, t_scale = 1.0;
  bool constant_model = false;  // degenerate constant-target fit
  GpHyper hyper;
  double jitter = 0.0;  // diagonal boost needed to factorize
  double lml = 0.0;     // log marginal likelihood of the selected fit
  std::vector<double> chol;   // n x n lower-triangular factor
  std::vector<double> alpha;  // K^{-1} y_std
};

// Model selection maximizes the log marginal likelihood over a fixed grid:
// length_scale in {0.1,0.25,0.5,1,2,4}*sqrt(d), signal variance in
// {0.5,1,2}, noise in {1e-6,1e-4,1e-2}. Cholesky failures escalate a diagonal
// jitter through {1e-10,1e-8,1e-6} before the configuration is discarded.
GpModel gp_fit(std::span<const double> x, std::size_t n, std::size_t d,
               std::span<const double> y, const GpFitOptions& opts = {});

struct GpPrediction {
  double mean = 0.0;
  double stddev = 0.0;    // predictive observation std (includes noise)
  double stddev_f = 0.0;  // epistemic std of f itself (noise-free); what
                          // acquisition scores use, zero at noiseless data
};

GpPrediction gp_predict(const GpModel& model, std::span<const double> z);

}  // namespace lsbo
