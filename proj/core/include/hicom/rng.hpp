#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hicom {

// splitmix64 step; used to derive independent seed streams from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

template <class... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt, Rest... rest) {
  return mix_seed(mix_seed(seed, salt), rest...);
}

// Deterministic RNG wrapper. mt19937_64 is fully specified by the standard;
// the std distributions are not, so the derivations below are spelled out by
// hand and every operation is a pure function of its seed on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform integer in [lo, hi], inclusive. The modulo bias is at most
  // range/2^64, far below anything measurable here.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % range);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Box-Muller; the +1 keeps the log argument strictly positive.
  double normal(double mean, double stddev) {
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates; std::shuffle is implementation-specified, this is not.
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Uniform sample of m distinct elements, order given by the draw
  // (partial Fisher-Yates). m must be <= pool.size().
  template <class T>
  std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t m) {
    std::vector<T> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t j = static_cast<std::size_t>(
          uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool.size()) - 1));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hicom
