#ifndef FOGPIPE_RNG_HPP_
#define FOGPIPE_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace fogpipe {

// Deterministic RNG used by every randomized component. Only the raw
// mt19937_64 engine output is consumed (the engine is fully specified by the
// standard); all value transforms are done here so streams are reproducible
// across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(mix(seed, 0x6c62272e07bb0142ull)) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive.
  int64_t next_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next_u64() % span);
  }

  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return next_double() < p;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; stable regardless of how much the parent
  // has been consumed.
  Rng fork(uint64_t stream) const { return Rng(mix(seed_, stream)); }

 private:
  static uint64_t mix(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the combined words
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace fogpipe

#endif  // FOGPIPE_RNG_HPP_
