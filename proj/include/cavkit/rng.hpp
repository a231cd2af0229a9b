#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cavkit {

// Seeded generator whose output sequence is identical on every platform.
// std::mt19937_64 is fully specified; the standard distributions are not, so
// uniform/normal/below are derived here from raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1), 53-bit resolution
  double normal();   // standard normal, Box-Muller
  std::size_t below(std::size_t bound);  // uniform in [0, bound)

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// Derives independent stream seeds from a base seed and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace cavkit
