#pragma once

#include <cstdint>
#include <vector>

#include "moverci/binary.hpp"
#include "moverci/types.hpp"

namespace testsup {

/// Small deterministic generator for property-style tests.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ? seed : 1) {}

  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

inline const std::vector<moverci::BinaryStratum>& bioassay() {
  static const std::vector<moverci::BinaryStratum> data = {
      {5, 79, 4, 16}, {3, 87, 2, 16}, {10, 90, 4, 18}, {3, 82, 1, 15}};
  return data;
}

}  // namespace testsup
