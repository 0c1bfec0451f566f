#ifndef MIXLOGIT_RANDOM_HPP
#define MIXLOGIT_RANDOM_HPP

#include <cstdint>

namespace mixlogit {

// Seedable uniform random stream built on the splitmix64 counter generator.
// The full draw sequence is a pure function of (seed, call sequence), and the
// generator algorithm is fixed here rather than delegated to the standard
// library, so sequences are identical across platforms and compilers.
//
// A stream must not be shared across concurrent tasks; fork() derives an
// independent child stream per chain / replication / sub-task.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : seed_(seed), state_(mix(seed ^ 0x5851F42D4C957F2DULL)) {}

  std::uint64_t seed() const { return seed_; }

  // splitmix64: state advances by the golden-gamma increment, output is the
  // mixed counter.
  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform draw clamped into [1e-16, 1 - 1e-16] so downstream log/logit
  // transforms never see 0 or 1.
  double uniform() {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    if (u < 1e-16) return 1e-16;
    if (u > 1.0 - 1e-16) return 1.0 - 1e-16;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Independent child stream. Children and parent use disjoint mixing of the
  // (seed, index) pair; collisions between sub-streams are ruled out at the
  // level of the documented algorithm.
  RandomStream fork(std::uint64_t index) const {
    std::uint64_t child = seed_;
    child = mix(child ^ (0xBF58476D1CE4E5B9ULL * (index + 1)));
    child = mix(child + 0x94D049BB133111EBULL);
    return RandomStream(child);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace mixlogit

#endif  // MIXLOGIT_RANDOM_HPP
