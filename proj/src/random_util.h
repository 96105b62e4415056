#ifndef QEXIT_SRC_RANDOM_UTIL_H_
#define QEXIT_SRC_RANDOM_UTIL_H_

#include <cstddef>
#include <random>

namespace qexit::detail {

// std::mt19937_64's output sequence is fixed by the standard; the standard
// distributions are not, so fixtures derive their draws from raw bits.

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in [0, n).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

}  // namespace qexit::detail

#endif  // QEXIT_SRC_RANDOM_UTIL_H_
