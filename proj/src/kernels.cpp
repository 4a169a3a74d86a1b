#include "lsbo/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace lsbo::kernels {

#ifdef LSBO_BUILD_AVX2
const Ops* avx2_table();  // kernels_avx2.cpp
#else
static const Ops* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Ops* select_default() {
  if (const char* env = std::getenv("LSBO_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0 && avx2_ops() != nullptr) return avx2_ops();
    // unrecognized or unavailable: fall through to auto selection
  }
  if (const Ops* t = avx2_ops()) return t;
  return &scalar_ops();
}

std::atomic<const Ops*>& active_slot() {
  static std::atomic<const Ops*> slot{select_default()};
  return slot;
}

}  // namespace

const Ops* avx2_ops() { return cpu_has_avx2() ? avx2_table() : nullptr; }

const Ops& active() { return *active_slot().load(std::memory_order_relaxed); }

Isa active_isa() {
  return &active() == &scalar_ops() ? Isa::scalar : Isa::avx2;
}

void force_isa(Isa isa) {
  if (isa == Isa::scalar) {
    active_slot().store(&scalar_ops(), std::memory_order_relaxed);
    return;
  }
  const Ops* t = avx2_ops();
  if (t == nullptr) throw std::runtime_error("kernels: avx2 not available on this machine");
  active_slot().store(t, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::scalar ? "scalar" : "avx2";
}

}  // namespace lsbo::kernels
