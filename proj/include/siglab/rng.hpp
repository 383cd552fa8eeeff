#pragma once

#include <cstdint>

namespace siglab {

/// Counter-based pseudo-random streams built on the SplitMix64 finalizer.
///
/// Every stream is addressed by (seed, domain, id): demand draws use one
/// stream per lane, routing draws one per junction. Adding a lane or a
/// junction therefore never shifts the draws of any existing stream, which
/// keeps runs replayable across scenario edits.
enum class RngDomain : std::uint64_t {
  Demand = 0x7d1c7e6f2a3b4c5dULL,
  Routing = 0x5a8e9d0c1b2f3e4dULL,
  Generic = 0x3c4d5e6f708192a3ULL,
};

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, RngDomain domain, std::uint64_t id)
      : key_(mix64(mix64(seed ^ static_cast<std::uint64_t>(domain)) +
                   0x9e3779b97f4a7c15ULL * (id + 1))) {}

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ ^ counter_);
  }

  /// Uniform double in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Stateless uniform in [0, 1) for (seed, domain, id, tick) tuples; used for
/// per-second demand draws so a lane's arrivals depend only on its own name.
inline double uniform_at(std::uint64_t seed, RngDomain domain, std::uint64_t id,
                         std::uint64_t tick) {
  std::uint64_t key = mix64(mix64(seed ^ static_cast<std::uint64_t>(domain)) +
                            0x9e3779b97f4a7c15ULL * (id + 1));
  return static_cast<double>(mix64(key ^ (tick + 1) * 0xbf58476d1ce4e5b9ULL) >> 11) *
         0x1.0p-53;
}

}  // namespace siglab
