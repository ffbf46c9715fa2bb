#pragma once
// Deterministic randomness. All sampling goes through Rng (a mt19937_64
// with hand-rolled transforms) so results are bit-reproducible; the
// std::*_distribution adapters are implementation-defined and never used.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace kmlab {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed derivation for parallel work: splitmix-style chain over
// (master, stream, index). Used by the sweep to hand each (cell, run)
// pair its own stream; index 0 is reserved for the cell's seeding RNG,
// runs use 1..R.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
  return mix64(mix64(master ^ mix64(stream + 1)) ^ mix64(index + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform index in [0, n); rejection sampling, no modulo bias.
  std::int64_t next_index(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("Rng::next_index: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::int64_t>(x % un);
  }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1;
    do {
      u1 = next_unit();
    } while (u1 <= 0.0);
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    cached_ = r * std::sin(two_pi * u2);
    has_cached_ = true;
    return r * std::cos(two_pi * u2);
  }

  std::vector<double> next_gaussian_vector(int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = next_gaussian();
    return v;
  }

  // Uniform in the closed ball of the given radius around the origin.
  std::vector<double> next_in_ball(int dim, double radius) {
    std::vector<double> v = next_gaussian_vector(dim);
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    double norm = std::sqrt(norm2);
    if (norm == 0.0) norm = 1.0;
    const double u = next_unit();
    const double scale = radius * std::pow(u, 1.0 / dim) / norm;
    for (auto& x : v) x *= scale;
    return v;
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace kmlab
