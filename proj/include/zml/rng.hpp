#pragma once

#include <cstdint>

namespace zml {

/// Counter-based generator: the i-th draw of stream `stream` is a pure
/// function of (seed, stream, i), so samples do not depend on evaluation
/// order or thread count. Mixing is the SplitMix64 finalizer.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t bits(std::uint64_t counter) const {
    std::uint64_t z = seed_ ^ mix(stream_ + 0x9e3779b97f4a7c15ULL) ^
                      (counter * 0xd1b54a32d192ed03ULL);
    return mix(z);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace zml
