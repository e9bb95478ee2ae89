#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace eiv {

// SplitMix64 finalizer; used to spread structured key material across the
// full 64-bit space before it seeds an engine.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = mix64(h ^ w);
  return h;
}

inline std::uint64_t bits_of(double v) {
  return std::bit_cast<std::uint64_t>(v);
}

// Stream purposes keep the draws of one replication decoupled: adding draws
// to one purpose never shifts another purpose's sequence.
enum class StreamPurpose : std::uint64_t {
  variance_draw = 1,
  observation_error = 2,
  measurement_error = 3,
  ensemble = 4,
};

// Deterministic random stream. The same key replays the same sequence in any
// build of this code: mt19937_64 and the 53-bit uniform conversion are pinned
// by the standard, and the normal transform uses only libm calls on exact
// inputs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : engine_(key) {}

  static RngStream derive(std::initializer_list<std::uint64_t> words) {
    return RngStream(hash_words(words));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Standard normal via the Box-Muller pair, one value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = 1.0 - uniform01();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double t = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eiv
