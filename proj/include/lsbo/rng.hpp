#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace lsbo {

// FNV-1a over bytes; used for stream tags and artifact fingerprints.
std::uint64_t fnv1a64(std::string_view s);

// Deterministic random stream. The generator is std::mt19937_64 (its output
// sequence is pinned by the standard) and every distribution is implemented
// here rather than taken from <random>, because the standard leaves
// distribution algorithms implementation-defined. One campaign seed is split
// into independent named streams via splitmix64 over a tag hash, so adding a
// consumer never shifts the draws of another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Derives the stream seed for (seed, tag); identical across platforms.
  static std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag);
  static Rng stream(std::uint64_t seed, std::string_view tag) {
    return Rng(stream_seed(seed, tag));
  }

  std::uint64_t next_u64() { return gen_(); }

  // unbiased integer in [0, n); n must be positive
  std::uint64_t uniform_below(std::uint64_t n);

  // uniform in [0, 1) with 53 random bits
  double uniform01();

  // standard normal via Box-Muller, two uniforms per draw, no cached spare
  // (keeps the stream state fully described by the generator state)
  double normal();

  // textual state round-trip, used by campaign checkpointing
  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lsbo
