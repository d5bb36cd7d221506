#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace oppi::num {

/// Counter-based generator: draw k of stream s under seed is a pure function of (seed, s, k),
/// so separate purposes (shuffling, masking, dropout) get independent reproducible streams.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n); n must be > 0.
  std::size_t below(std::size_t n) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  /// Independent child stream; does not advance this generator.
  CounterRng fork(std::uint64_t stream) const noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

  template <typename Index>
  void shuffle(std::span<Index> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace oppi::num
