#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace imitlab {

/// Counter-based generator in the SplitMix64 family. Draw i is a pure
/// function of (key, i), so a stream can be split into independent children
/// without sharing state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return mix(key_ + counter_ * kGamma);
  }

  /// Child stream keyed by this stream's key and `stream`. Does not advance
  /// the parent.
  Rng split(std::uint64_t stream) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(stream + kGamma));
    return child;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Index drawn from a probability vector by inverse CDF.
  std::size_t categorical(std::span<const double> probs);

  std::uint64_t key() const { return key_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Hashes a base seed together with integer coordinates (cell indices,
/// replicate number, ...). Used to give every sweep cell its own stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

}  // namespace imitlab
