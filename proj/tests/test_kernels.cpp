#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "lsbo/kernels.hpp"
#include "lsbo/rng.hpp"

using namespace lsbo;
using kernels::Ops;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (rng.uniform01() * 2.0 - 1.0);
  return v;
}

// Reference mirror of the pinned reduction order: four independent
// accumulators over the stride-4 body, combined (a0+a1)+(a2+a3), then a
// sequential tail.
double pinned_sum(const std::vector<double>& terms) {
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  std::size_t n4 = terms.size() / 4 * 4, i = 0;
  for (; i < n4; i += 4) {
    a0 += terms[i];
    a1 += terms[i + 1];
    a2 += terms[i + 2];
    a3 += terms[i + 3];
  }
  double s = (a0 + a1) + (a2 + a3);
  for (; i < terms.size(); ++i) s += terms[i];
  return s;
}

}  // namespace

TEST_CASE("scalar dot matches the documented accumulation order") {
  Rng rng(11);
  for (std::size_t n : {std::size_t(0), std::size_t(1), std::size_t(3),
                        std::size_t(4), std::size_t(7), std::size_t(64),
                        std::size_t(129)}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) terms[i] = a[i] * b[i];
    CHECK(kernels::scalar_ops().dot(a.data(), b.data(), n) ==
          pinned_sum(terms));
  }
}

TEST_CASE("scalar sq_dist matches the documented accumulation order") {
  Rng rng(12);
  for (std::size_t n : {std::size_t(1), std::size_t(5), std::size_t(32),
                        std::size_t(101)}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i)
      terms[i] = (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(kernels::scalar_ops().sq_dist(a.data(), b.data(), n) ==
          pinned_sum(terms));
  }
}

TEST_CASE("matvec agrees with per-row dot") {
  Rng rng(13);
  const std::size_t rows = 7, cols = 13;
  auto w = random_vec(rng, rows * cols);
  auto x = random_vec(rng, cols);
  std::vector<double> y(rows);
  kernels::scalar_ops().matvec(w.data(), rows, cols, x.data(), y.data());
  for (std::size_t r = 0; r < rows; ++r)
    CHECK(y[r] == kernels::scalar_ops().dot(w.data() + r * cols, x.data(), cols));
}

TEST_CASE("matvec_t is the exact transpose action") {
  Rng rng(14);
  const std::size_t rows = 5, cols = 9;
  auto w = random_vec(rng, rows * cols);
  auto g = random_vec(rng, rows);
  std::vector<double> got(cols);
  kernels::scalar_ops().matvec_t(w.data(), rows, cols, g.data(), got.data());
  // reference: zero then per-row axpy, the documented formulation
  std::vector<double> want(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) want[c] += g[r] * w[r * cols + c];
  for (std::size_t c = 0; c < cols; ++c) CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-15));
}

TEST_CASE("outer_acc accumulates rank-one updates") {
  Rng rng(15);
  const std::size_t rows = 6, cols = 11;
  auto g = random_vec(rng, rows);
  auto x = random_vec(rng, cols);
  auto gw = random_vec(rng, rows * cols);
  auto want = gw;
  kernels::scalar_ops().outer_acc(gw.data(), g.data(), x.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      want[r * cols + c] += g[r] * x[c];
      CHECK(gw[r * cols + c] == want[r * cols + c]);
    }
}

TEST_CASE("every op is bit-identical across ISA variants") {
  const Ops* avx2 = kernels::avx2_ops();
  if (avx2 == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence vacuously holds");
    return;
  }
  const Ops& ref = kernels::scalar_ops();
  Rng rng(16);
  // Sizes straddle the 4-lane width to cover full blocks and scalar tails.
  for (std::size_t n : {std::size_t(1), std::size_t(2), std::size_t(3),
                        std::size_t(4), std::size_t(5), std::size_t(6),
                        std::size_t(7), std::size_t(8), std::size_t(15),
                        std::size_t(16), std::size_t(17), std::size_t(64),
                        std::size_t(100), std::size_t(257)}) {
    for (int rep = 0; rep < 8; ++rep) {
      auto a = random_vec(rng, n, 3.0), b = random_vec(rng, n, 3.0);
      CHECK(ref.dot(a.data(), b.data(), n) == avx2->dot(a.data(), b.data(), n));
      CHECK(ref.sq_dist(a.data(), b.data(), n) ==
            avx2->sq_dist(a.data(), b.data(), n));

      auto y1 = random_vec(rng, n);
      auto y2 = y1;
      double alpha = rng.uniform01() * 4.0 - 2.0;
      ref.axpy(y1.data(), alpha, a.data(), n);
      avx2->axpy(y2.data(), alpha, a.data(), n);
      CHECK(y1 == y2);
    }
  }
  for (std::size_t rows : {std::size_t(1), std::size_t(3), std::size_t(8)}) {
    for (std::size_t cols : {std::size_t(1), std::size_t(5), std::size_t(17),
                             std::size_t(64)}) {
      auto w = random_vec(rng, rows * cols);
      auto x = random_vec(rng, cols);
      auto g = random_vec(rng, rows);
      std::vector<double> y1(rows), y2(rows), t1(cols), t2(cols);
      ref.matvec(w.data(), rows, cols, x.data(), y1.data());
      avx2->matvec(w.data(), rows, cols, x.data(), y2.data());
      CHECK(y1 == y2);
      ref.matvec_t(w.data(), rows, cols, g.data(), t1.data());
      avx2->matvec_t(w.data(), rows, cols, g.data(), t2.data());
      CHECK(t1 == t2);
      auto gw1 = random_vec(rng, rows * cols);
      auto gw2 = gw1;
      ref.outer_acc(gw1.data(), g.data(), x.data(), rows, cols);
      avx2->outer_acc(gw2.data(), g.data(), x.data(), rows, cols);
      CHECK(gw1 == gw2);
    }
  }
}

TEST_CASE("adam_update is bit-identical across ISA variants") {
  const Ops* avx2 = kernels::avx2_ops();
  if (avx2 == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence vacuously holds");
    return;
  }
  Rng rng(17);
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(4),
                        std::size_t(9), std::size_t(40), std::size_t(103)}) {
    auto p1 = random_vec(rng, n), m1 = random_vec(rng, n, 0.1);
    std::vector<double> v1(n);
    for (double& x : v1) x = rng.uniform01() * 0.01;
    auto g = random_vec(rng, n);
    auto p2 = p1;
    auto m2 = m1;
    auto v2 = v1;
    // corr factors for step t=5
    double corr1 = 1.0 / (1.0 - std::pow(0.9, 5));
    double corr2 = 1.0 / (1.0 - std::pow(0.999, 5));
    kernels::scalar_ops().adam_update(p1.data(), m1.data(), v1.data(), g.data(),
                                      n, 1e-3, 0.9, 0.999, 1e-8, corr1, corr2);
    avx2->adam_update(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9,
                      0.999, 1e-8, corr1, corr2);
    CHECK(p1 == p2);
    CHECK(m1 == m2);
    CHECK(v1 == v2);
  }
}

TEST_CASE("adam_update implements the bias-corrected recurrence") {
  // One step against the textbook update computed longhand.
  double p = 0.5, m = 0.1, v = 0.02, g = -0.3;
  double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double corr1 = 1.0 / (1.0 - b1), corr2 = 1.0 / (1.0 - b2);  // t = 1
  double em = b1 * m + (1 - b1) * g;
  double ev = b2 * v + (1 - b2) * g * g;
  double want = p - lr * (em * corr1) / (std::sqrt(ev * corr2) + eps);
  kernels::scalar_ops().adam_update(&p, &m, &v, &g, 1, lr, b1, b2, eps, corr1,
                                    corr2);
  CHECK(m == em);
  CHECK(v == ev);
  CHECK(p == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("ISA selection respects the environment override and never changes numerics") {
  // The build ran under whatever LSBO_KERNELS the environment set; exercise
  // the force hook both ways when AVX2 exists.
  kernels::Isa initial = kernels::active_isa();
  kernels::force_isa(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  Rng rng(18);
  auto a = random_vec(rng, 37), b = random_vec(rng, 37);
  double scalar_val = kernels::active().dot(a.data(), b.data(), 37);
  if (kernels::avx2_ops() != nullptr) {
    kernels::force_isa(kernels::Isa::avx2);
    CHECK(kernels::active_isa() == kernels::Isa::avx2);
    CHECK(kernels::active().dot(a.data(), b.data(), 37) == scalar_val);
  } else {
    CHECK_THROWS(kernels::force_isa(kernels::Isa::avx2));
  }
  kernels::force_isa(initial);
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  CHECK(kernels::isa_name(kernels::Isa::avx2) == "avx2");
}
