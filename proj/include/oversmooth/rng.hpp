#pragma once

#include <cstdint>
#include <limits>

namespace oversmooth {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent random streams are named by (root seed, domain, trial, step).
enum class StreamDomain : std::uint64_t {
  kWeights = 1,
  kInitialFeatures = 2,
  kLyapunov = 3,
  kGaussianMc = 4,
  kSimDiagMc = 5,
  kIntegrability = 6,
  kBasis = 7,
  kGraph = 8,
  kStartVector = 9,
};

constexpr std::uint64_t stream_key(std::uint64_t seed, StreamDomain domain,
                                   std::uint64_t trial, std::uint64_t step) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ static_cast<std::uint64_t>(domain));
  k = mix64(k ^ trial);
  return mix64(k ^ step);
}

// Counter-based generator: the i-th draw is mix64(key + i * golden), a pure
// function of (key, i). Satisfies UniformRandomBitGenerator so the standard
// distributions can sit on top of it.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, StreamDomain domain, std::uint64_t trial,
             std::uint64_t step)
      : key_(stream_key(seed, domain, trial, step)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    return mix64(key_ + counter_++ * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace oversmooth
