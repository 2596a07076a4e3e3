#include "imitlab/rng.hpp"

#include <stdexcept>

namespace imitlab {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  // Lemire's multiply-shift with rejection of the biased low zone.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const unsigned __int128 prod = static_cast<unsigned __int128>((*this)()) * n;
    if (static_cast<std::uint64_t>(prod) >= threshold) return static_cast<std::uint64_t>(prod >> 64);
  }
}

std::size_t Rng::categorical(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("Rng::categorical: empty distribution");
  const double u = uniform();
  double acc = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  if (last_positive == probs.size())
    throw std::invalid_argument("Rng::categorical: distribution has no positive entry");
  // Rounding can leave acc slightly below 1.
  return last_positive;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = Rng::mix(base + 0x243f6a8885a308d3ULL);
  for (std::uint64_t c : coords) h = Rng::mix(h ^ Rng::mix(c + 0x13198a2e03707344ULL));
  return h;
}

}  // namespace imitlab
