#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aliaslab {

// 64-bit FNV-1a over a string. Used to derive run seeds from experiment ids
// so that results are stable across rebuilds and platforms.
inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for run k of an experiment; `stream` separates independent generator
// streams within one run (0 = parameter init, 1 = action sampling, ...).
inline uint64_t derive_seed(std::string_view experiment_id, uint64_t k, uint64_t stream = 0) {
  return splitmix64(splitmix64(fnv1a64(experiment_id) + k) + stream);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution. Consumes exactly one engine draw.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n is tiny here (action counts), so the
  // scaled-double method is adequate.
  int below(int n) {
    int i = static_cast<int>(uniform() * n);
    return i < n ? i : n - 1;
  }

  uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace aliaslab
