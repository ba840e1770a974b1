#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (key, counter): the key is derived from a
// master seed and a stream index, the counter is the draw position. Parallel
// tasks therefore produce identical numbers regardless of scheduling.

#include <cmath>
#include <cstdint>
#include <limits>

#include "core.hpp"

namespace nnspec {

/// 64-bit finalizer (the SplitMix64 output function).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream identifiers used by the samplers, so that one user seed can drive
/// several independent quantities.
namespace streams {
inline constexpr std::uint64_t kGinibre = 0;
inline constexpr std::uint64_t kDiagonal = 1;
inline constexpr std::uint64_t kLimitLaw = 2;
inline constexpr std::uint64_t kHaar = 3;
inline constexpr std::uint64_t kFrames = 4;
inline constexpr std::uint64_t kSchur = 5;
inline constexpr std::uint64_t kTestPoints = 6;
}  // namespace streams

constexpr std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t stream) noexcept {
  return mix64(master_seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t master_seed, std::uint64_t stream = 0, std::uint64_t task = 0) noexcept
      : key_(derive_key(derive_key(master_seed, stream), task)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Random word at an absolute counter position; does not advance.
  result_type at(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
  }

  result_type operator()() noexcept { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return to_unit(operator()()); }
  double uniform_at(std::uint64_t counter) const noexcept { return to_unit(at(counter)); }

  /// Standard complex Gaussian: Re and Im independent N(0, 1/2), E|g|^2 = 1.
  /// Box-Muller on two consecutive words.
  Complex complex_gaussian() noexcept {
    const Complex g = complex_gaussian_at(counter_);
    counter_ += 2;
    return g;
  }
  Complex complex_gaussian_at(std::uint64_t counter) const noexcept {
    const double u1 = 1.0 - to_unit(at(counter));  // (0, 1]
    const double u2 = to_unit(at(counter + 1));
    const double r = std::sqrt(-std::log(u1));
    return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
  }

  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  static double to_unit(result_type x) noexcept { return static_cast<double>(x >> 11) * 0x1.0p-53; }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nnspec
