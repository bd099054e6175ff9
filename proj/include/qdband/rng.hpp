#pragma once

#include <cstdint>
#include <random>

namespace qdband {

namespace detail {

//! splitmix64 finalizer; a stateless 64-bit mixing function.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

//! Derives a well-spread stream seed from a user seed plus a (domain, index)
//! pair. Distinct pairs give statistically independent streams, so parallel
//! workers never share generator state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain,
                                 std::uint64_t index = 0) noexcept {
  std::uint64_t s = detail::mix64(seed + detail::kGolden * (domain + 1));
  return detail::mix64(s + detail::kGolden * (index + 1));
}

//! Deterministic pseudo-random stream. The underlying mt19937_64 sequence is
//! fixed by the standard, so results are reproducible across platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t seed, std::uint64_t domain,
                          std::uint64_t index = 0) {
    return RngStream(derive_seed(seed, domain, index));
  }

  //! Uniform draw on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qdband
