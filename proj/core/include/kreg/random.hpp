#pragma once

#include <complex>
#include <cstdint>

namespace kreg {

/// Counter-based Gaussian noise. Every draw is a pure function of
/// (seed, stream, index), so samples can be generated in any order or in
/// parallel and still match bit for bit.
///
/// Algorithm (pinned): h(s, t, i) = mix(mix(mix(s) ^ t) ^ i) where mix is the
/// SplitMix64 step (add 0x9E3779B97F4A7C15, then the xor-shift-multiply
/// finalizer). Uniforms use the top 53 bits, u = ((h >> 11) + 0.5) / 2^53.
/// A complex draw takes u1 = U(2i), u2 = U(2i + 1) and returns the Box-Muller
/// pair sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2).
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z);
  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const;
  double uniform(std::uint64_t stream, std::uint64_t index) const;

  /// Standard normal pair packed as a complex number (each part ~ N(0, 1)).
  std::complex<double> normal_pair(std::uint64_t stream, std::uint64_t index) const;

  /// Circular complex Gaussian with E|n|^2 = sigma^2.
  std::complex<double> circular(std::uint64_t stream, std::uint64_t index, double sigma) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace kreg
