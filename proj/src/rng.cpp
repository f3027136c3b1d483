#include "tcal/rng.hpp"

#include <limits>

namespace tcal {

std::uint64_t SeededRng::uniform_index(std::uint64_t bound) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return draw % bound;
}

double SeededRng::uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

}  // namespace tcal
