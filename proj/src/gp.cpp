#include "lsbo/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lsbo/kernels.hpp"

namespace lsbo {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double se_cov(double sqdist, double ls, double sv) {
  return sv * std::exp(-sqdist / (2.0 * ls * ls));
}

// In-place lower Cholesky of a symmetric matrix held row-major in a. Returns
// false if a pivot is not strictly positive.
bool cholesky(std::vector<double>& a, std::size_t n) {
  const kernels::Ops& ops = kernels::active();
  for (std::size_t j = 0; j < n; ++j) {
    double* rowj = a.data() + j * n;
    double diag = rowj[j] - ops.dot(rowj, rowj, j);
    if (!(diag > 0.0)) return false;
    rowj[j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double* rowi = a.data() + i * n;
      rowi[j] = (rowi[j] - ops.dot(rowi, rowj, j)) / rowj[j];
    }
  }
  // Zero the strict upper triangle so the factor serializes cleanly.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  return true;
}

void solve_lower(const std::vector<double>& l, std::size_t n,
                 std::vector<double>& b) {
  const kernels::Ops& ops = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = l.data() + i * n;
    b[i] = (b[i] - ops.dot(row, b.data(), i)) / row[i];
  }
}

void solve_upper_t(const std::vector<double>& l, std::size_t n,
                   std::vector<double>& b) {
  // Solves L^T x = b; columns of L are strided so the loop stays scalar.
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

struct FitAttempt {
  bool ok = false;
  double lml = -std::numeric_limits<double>::infinity();
  double jitter = 0.0;
  std::vector<double> chol;
  std::vector<double> alpha;
};

FitAttempt try_fit(const std::vector<double>& sqd, std::size_t n,
                   const std::vector<double>& y, const GpHyper& h) {
  FitAttempt out;
  static const double ladder[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double jit : ladder) {
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        k[i * n + j] = se_cov(sqd[i * n + j], h.length_scale, h.signal_var);
    for (std::size_t i = 0; i < n; ++i) k[i * n + i] += h.noise + jit;
    if (!cholesky(k, n)) continue;
    std::vector<double> a = y;
    solve_lower(k, n, a);
    solve_upper_t(k, n, a);
    double quad = kernels::active().dot(y.data(), a.data(), n);
    double logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet += std::log(k[i * n + i]);
    out.ok = true;
    out.lml = -0.5 * quad - logdet - 0.5 * double(n) * std::log(kTwoPi);
    out.jitter = jit;
    out.chol = std::move(k);
    out.alpha = std::move(a);
    return out;
  }
  return out;
}

}  // namespace

GpModel gp_fit(std::span<const double> x, std::size_t n, std::size_t d,
               std::span<const double> y, const GpFitOptions& opts) {
  if (n < 2) throw std::invalid_argument("gp: need at least two points");
  if (d == 0) throw std::invalid_argument("gp: zero-dimensional inputs");
  if (x.size() != n * d) throw std::invalid_argument("gp: input size mismatch");
  if (y.size() != n) throw std::invalid_argument("gp: target size mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("gp: non-finite input");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("gp: non-finite target");

  GpModel m;
  m.n = n;
  m.d = d;
  m.x.assign(x.begin(), x.end());

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= double(n);
  m.t_mean = mean;
  double sd = std::sqrt(var);

  if (sd < 1e-12) {
    // Constant targets carry no signal; predict the constant with the noise
    // floor as uncertainty.
    m.constant_model = true;
    m.t_scale = 1.0;
    m.hyper = opts.fixed ? *opts.fixed : GpHyper{std::sqrt(double(d)), 1.0, 1e-6};
    m.y_std.assign(n, 0.0);
    return m;
  }
  m.t_scale = sd;
  m.y_std.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.y_std[i] = (y[i] - mean) / sd;

  std::vector<double> sqd(n * n);
  const kernels::Ops& ops = kernels::active();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sqd[i * n + j] =
          ops.sq_dist(m.x.data() + i * d, m.x.data() + j * d, d);

  bool found = false;
  GpHyper best_h;
  FitAttempt best;
  if (opts.fixed) {
    best = try_fit(sqd, n, m.y_std, *opts.fixed);
    if (!best.ok) throw std::runtime_error("gp: fixed hyperparameters do not factorize");
    best_h = *opts.fixed;
    found = true;
  } else {
    static const double ls_mult[] = {0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
    static const double sv_grid[] = {0.5, 1.0, 2.0};
    static const double noise_grid[] = {1e-6, 1e-4, 1e-2};
    const double base = std::sqrt(double(d));
    for (double lm : ls_mult)
      for (double sv : sv_grid)
        for (double nz : noise_grid) {
          GpHyper h{lm * base, sv, nz};
          FitAttempt a = try_fit(sqd, n, m.y_std, h);
          if (!a.ok) continue;
          if (!found || a.lml > best.lml) {
            best = std::move(a);
            best_h = h;
            found = true;
          }
        }
    if (!found) throw std::runtime_error("gp: no hyperparameter configuration factorizes");
  }

  m.hyper = best_h;
  m.jitter = best.jitter;
  m.lml = best.lml;
  m.chol = std::move(best.chol);
  m.alpha = std::move(best.alpha);
  return m;
}

GpPrediction gp_predict(const GpModel& m, std::span<const double> z) {
  if (z.size() != m.d) throw std::invalid_argument("gp: query size mismatch");
  if (m.constant_model) {
    return {m.t_mean, std::sqrt(m.hyper.noise), 0.0};
  }
  const kernels::Ops& ops = kernels::active();
  std::vector<double> k(m.n);
  for (std::size_t i = 0; i < m.n; ++i) {
    double sq = ops.sq_dist(z.data(), m.x.data() + i * m.d, m.d);
    k[i] = se_cov(sq, m.hyper.length_scale, m.hyper.signal_var);
  }
  double mu = ops.dot(k.data(), m.alpha.data(), m.n);
  std::vector<double> v = k;
  solve_lower(m.chol, m.n, v);
  double reduce = ops.dot(v.data(), v.data(), m.n);
  double latent = m.hyper.signal_var - reduce;
  if (latent < 0.0) latent = 0.0;
  double var = latent + m.hyper.noise;
  return {m.t_mean + m.t_scale * mu, m.t_scale * std::sqrt(var),
          m.t_scale * std::sqrt(latent)};
}

}  // namespace lsbo
