#pragma once

#include <cstdint>
#include <span>

namespace limsup {

// splitmix64 finalizer. All randomness in the library is counter-based:
// a value is a pure function of (key, counter), so evaluation order and
// parallel splits never change a realization.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Absorb a label into a key. Chained calls build per-purpose streams, e.g.
// key_chain(key_chain(seed, TAG_COIN), level).
constexpr uint64_t key_chain(uint64_t key, uint64_t part) {
  return mix64(key ^ (part + 0x632be59bd9b4e019ULL));
}

constexpr double u64_to_unit(uint64_t v) {
  return static_cast<double>(v >> 11) * 0x1.0p-53;  // [0, 1)
}

// Stateless draw at an explicit counter.
constexpr uint64_t rng_at(uint64_t key, uint64_t counter) {
  return mix64(key ^ mix64(counter ^ 0x94d049bb133111ebULL));
}

constexpr double unit_at(uint64_t key, uint64_t counter) {
  return u64_to_unit(rng_at(key, counter));
}

// Sequential stream (splitmix64 proper) for inherently ordered draws such as
// Markov center processes.
class RngStream {
 public:
  explicit RngStream(uint64_t key) : state_(mix64(key)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_unit() { return u64_to_unit(next_u64()); }

  // Uniform integer in [0, n) by rejection-free scaling; n must be > 0.
  uint64_t next_below(uint64_t n) {
    // 128-bit multiply keeps the map exact enough for n << 2^53.
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

 private:
  uint64_t state_;
};

// Stream tags for independent substreams of one experiment seed.
enum RngTag : uint64_t {
  TAG_AUDIT = 0x41,
  TAG_MC_PAIRS = 0x4d,
  TAG_COIN = 0x43,
  TAG_CENTERS = 0x58,
  TAG_MAPS = 0x49,
  TAG_INSTANCE = 0x4e,
};

}  // namespace limsup
