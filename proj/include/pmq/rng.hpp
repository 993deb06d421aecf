#pragma once

// Self-contained random number generation for the simulator. The standard
// <random> distributions are not bit-reproducible across library
// implementations, so sampling is done by hand on top of xoshiro256++.

#include <cmath>
#include <cstdint>

namespace pmq {

// splitmix64 finalizer; full avalanche, used for seed expansion and for
// deriving independent substreams.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // expand the seed with a splitmix64 sequence, as the xoshiro authors
    // recommend; guarantees a nonzero state
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += 0x9e3779b97f4a7c15ULL;
      word = mix64(sm);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform on [0, 1) with 53 significant bits
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // inverse transform; 1 - u stays in (0, 1], so the log never sees zero
  double exponential(double rate) { return -std::log(1.0 - uniform01()) / rate; }

  // uniform integer in [0, bound) as floor(u * bound); bound is tiny here
  // (farm sizes), so the 2^-53 rounding bias is irrelevant, and exactly one
  // draw is consumed every call
  std::uint64_t uniform_below(std::uint64_t bound) {
    const auto k = static_cast<std::uint64_t>(uniform01() * static_cast<double>(bound));
    return k < bound ? k : bound - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Streams used by a simulation replication. Service streams are per server
// so that fork-join variants with the same seed see the same demands.
enum class StreamId : std::uint64_t {
  arrivals = 0,
  routing = 1,
  service_base = 2,  // stream for server s is service_base + s
};

// The same (seed, replication, stream) triple always yields the same
// generator, independent of creation order or thread schedule.
inline Rng substream(std::uint64_t root_seed, std::uint64_t replication,
                     std::uint64_t stream) {
  std::uint64_t h = root_seed;
  h = mix64(h + 0x9e3779b97f4a7c15ULL * (replication + 1));
  h = mix64(h + 0xd1b54a32d192ed03ULL * (stream + 1));
  return Rng(h);
}

inline Rng substream(std::uint64_t root_seed, std::uint64_t replication,
                     StreamId stream) {
  return substream(root_seed, replication, static_cast<std::uint64_t>(stream));
}

}  // namespace pmq
