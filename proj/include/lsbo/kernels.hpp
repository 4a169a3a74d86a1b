#pragma once

#include <cstddef>
#include <string_view>

namespace lsbo::kernels {

enum class Isa { scalar, avx2 };

// Function table for the arithmetic inner loops (dense layers, Adam updates,
// GP distance/Cholesky algebra). Every variant of an entry is bit-identical
// to the scalar reference: reductions accumulate in a fixed four-lane order,
// elementwise ops keep the reference expression shape, and the build disables
// FP contraction. Selecting a different table can change speed, never values.
struct Ops {
  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i]-b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // y = W x, W row-major rows x cols
  void (*matvec)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // y = W^T g, y has cols entries
  void (*matvec_t)(const double* w, std::size_t rows, std::size_t cols,
                   const double* g, double* y);
  // gw[r][c] += g[r]*x[c]
  void (*outer_acc)(double* gw, const double* g, const double* x,
                    std::size_t rows, std::size_t cols);
  // one Adam step on a parameter block; corr1/corr2 are the precomputed
  // bias-correction factors 1/(1-beta1^t), 1/(1-beta2^t)
  void (*adam_update)(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double corr1, double corr2);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when the CPU or build lacks AVX2

// Runtime-selected table. Defaults to the widest supported ISA; the
// LSBO_KERNELS environment variable ("scalar"/"avx2") overrides at startup.
const Ops& active();
Isa active_isa();
void force_isa(Isa isa);  // test hook; throws when the ISA is unavailable
std::string_view isa_name(Isa isa);

}  // namespace lsbo::kernels
