#pragma once

// Deterministic random number utilities. Streams are xoshiro256++ seeded
// through splitmix64, and all variate draws are hand-rolled on top of the
// raw 64-bit output so that runs are bit-reproducible across platforms and
// standard-library versions.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace cogwlan {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
  }

  // Independent stream for entity `id` derived from a master seed.
  static Rng stream(std::uint64_t master, std::uint64_t id) {
    std::uint64_t sm = master;
    std::uint64_t mixed = splitmix64_next(sm) ^ (0xd1342543de82ef95ull * (id + 1));
    return Rng(mixed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Multiply-shift map; bias is O(n/2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double exponential(double rate) {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return -std::log1p(-u) / rate;
  }

  // Knuth's product method, chunked so the running product never underflows.
  int poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    int total = 0;
    while (mean > 50.0) {
      total += poisson_chunk(50.0);
      mean -= 50.0;
    }
    return total + poisson_chunk(mean);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  int poisson_chunk(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  std::uint64_t s_[4];
};

}  // namespace cogwlan
