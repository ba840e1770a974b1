#pragma once

#include <cstdint>

#include "nnspec/core.hpp"
#include "nnspec/rng.hpp"

namespace testing_support {

inline nnspec::CMatrix random_matrix(std::size_t n, std::size_t m, std::uint64_t seed) {
  nnspec::CounterRng rng(seed, 99);
  nnspec::CMatrix a(n, m);
  for (auto& x : a.data()) x = rng.complex_gaussian();
  return a;
}

inline nnspec::CMatrix random_matrix(std::size_t n, std::uint64_t seed) { return random_matrix(n, n, seed); }

}  // namespace testing_support
