#pragma once

#include <cstdint>
#include <initializer_list>

namespace featsim {

// Name of the generator below, recorded in run metadata.
inline constexpr const char* kRngName = "splitmix64-ctr/v1";

// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based generator: the n-th draw is mix64(key + n * golden_gamma), so
// any stream position is addressable without replaying earlier draws and two
// keys never share state.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  std::uint64_t next() { return mix64(key_ + (++counter_) * kGamma); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// Key of an independent sub-stream, e.g. stream_key(seed, {point, realization,
// tensor}). Deterministic and order-sensitive in `path`.
constexpr std::uint64_t stream_key(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = mix64(master ^ 0x6a09e667f3bcc909ull);
  for (std::uint64_t v : path) k = mix64(k ^ mix64(v + CounterRng::kGamma));
  return k;
}

}  // namespace featsim
