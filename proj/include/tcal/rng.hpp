#pragma once

#include <cstdint>
#include <random>

namespace tcal {

// Seeded generator with a portable bounded draw. std::uniform_*_distribution
// output differs between standard libraries, so streams built on it would not
// be reproducible across toolchains.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, bound); bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform_real();

 private:
  std::mt19937_64 engine_;
};

}  // namespace tcal
