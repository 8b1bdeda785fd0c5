#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace sonify {

// Deterministic generator keyed by a tuple of integers. std::mt19937_64 is
// fully specified by the standard; the distributions below are written out
// because the std:: ones are implementation-defined.
class KeyedRng {
 public:
  KeyedRng(std::initializer_list<std::uint64_t> key);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double normal();
  // Uniform in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

// Fisher-Yates shuffle driven by KeyedRng, reproducible across platforms.
template <typename T>
void keyed_shuffle(std::vector<T>& items, KeyedRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace sonify
