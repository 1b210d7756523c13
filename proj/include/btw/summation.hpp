#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace btw {

/// Streaming cascade (pairwise) summation.
///
/// Values are summed naively in blocks of 32; finished blocks are merged
/// like a binary counter so the rounding error grows as O(log n) rather
/// than O(n). The traversal order is fixed, so the result only depends on
/// the sequence of values added.
template <class T>
class PairwiseSum {
 public:
  void add(const T& v) {
    block_ += v;
    if (++fill_ == kBlock) flush();
  }

  T total() const {
    T acc = block_;
    for (std::size_t level = 0; level < levels_.size(); ++level) {
      if (occupied_ >> level & 1u) acc = levels_[level] + acc;
    }
    return acc;
  }

 private:
  static constexpr int kBlock = 32;

  void flush() {
    T carry = block_;
    block_ = T{};
    fill_ = 0;
    std::size_t level = 0;
    while (occupied_ >> level & 1u) {
      carry = levels_[level] + carry;
      occupied_ &= ~(std::uint64_t{1} << level);
      ++level;
    }
    levels_[level] = carry;
    occupied_ |= std::uint64_t{1} << level;
  }

  T block_{};
  int fill_ = 0;
  std::array<T, 64> levels_{};
  std::uint64_t occupied_ = 0;
};

/// Recursive pairwise sum of a contiguous range; deterministic split points.
template <class T>
T pairwise_sum(std::span<const T> values) {
  if (values.size() <= 16) {
    T acc{};
    for (const T& v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace btw
