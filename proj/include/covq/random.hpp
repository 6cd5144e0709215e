// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_RANDOM_HPP
#define COVQ_RANDOM_HPP

#include <cstdint>
#include <cmath>

#include "covq/types.hpp"

namespace covq {

// splitmix64 stream; used instead of <random> distributions so seeded runs
// are reproducible across standard library implementations.
struct SplitMix {
  std::uint64_t state;

  explicit SplitMix(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Complex cgauss() {
    const double u1 = uniform01() + 1e-300;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return Complex(r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2));
  }
};

} // namespace covq

#endif
