// Seeded random number generation with named, versioned sub-streams.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace yfree {

// Generator identity tag; bump on any change to the draw algorithms below.
inline constexpr std::string_view kRngStream = "yfree-rng/1";

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix_seed(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Independent sub-stream addressed by name; derivation depends only on
  // (seed, name, stream version), never on draw history.
  Rng derive(std::string_view name) const {
    std::uint64_t s = seed_ ^ fnv1a64(kRngStream);
    std::uint64_t h = s;
    (void)splitmix64_next(h);
    h ^= fnv1a64(name);
    return Rng(splitmix64_next(h));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0,1), 53-bit resolution, zero excluded.
  double uniform() {
    while (true) {
      double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    while (true) {
      std::uint64_t v = gen_();
      if (v < limit) return v % n;
    }
  }

  // Standard normal via Marsaglia polar; second deviate cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  static std::uint64_t mix_seed(std::uint64_t seed) {
    std::uint64_t s = seed ^ fnv1a64(kRngStream);
    return splitmix64_next(s);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace yfree
