#pragma once

#include <cstdint>

namespace pairsim {

// Counter-friendly 64-bit generator. One instance per logical stream; streams
// are derived by hashing (master seed, object id, stream id) so that chunked
// and unchunked simulations consume identical randomness.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Substream identifiers. Physics, measurement, and loss decisions use
// separate streams so that e.g. changing efficiencies leaves the physics
// trajectories untouched.
enum class Stream : std::uint64_t {
  kGeneration = 1,
  kCavityExit = 2,
  kMeasurement = 3,
  kLoss = 4,
  kScanPoint = 5,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id,
                                 Stream stream) {
  std::uint64_t h = detail::mix64(master + 0x9e3779b97f4a7c15ULL);
  h = detail::mix64(h ^ id);
  h = detail::mix64(h ^ static_cast<std::uint64_t>(stream));
  return h;
}

// Uniform double in [0, 1).
inline double uniform01(SplitMix64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace pairsim
