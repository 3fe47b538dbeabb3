#pragma once

#include <cstdint>
#include <random>

namespace simopt {

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for substream (a, b) of a master seed. Counter-based: no state is shared
/// between substreams, so they can be generated in any order or in parallel.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                                  std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) + 0x632be59bd9b4e019ULL * (b + 1));
}

/// A seedable stream that hands out independent engines, one per request.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  /// Engine for the next substream; advances the counter by one.
  [[nodiscard]] Engine next_engine() { return Engine(derive_seed(seed_, stream_, counter_++)); }

  /// Child stream keyed by `id`, independent of this stream's counter.
  [[nodiscard]] RngStream child(std::uint64_t id) const {
    return RngStream(derive_seed(seed_, stream_, 0xC0FFEEULL + id), 0);
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace simopt
