#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace btw {

using cplx = std::complex<double>;

/// Twiddle factors e(-j/n) for 0 <= j < n. Small sizes are tabulated
/// directly; large sizes use a two-level split e(-(hi*2^s + lo)/n) with
/// 2^s near sqrt n, so memory stays O(sqrt n).
class TwiddleTable {
 public:
  explicit TwiddleTable(std::size_t n);

  cplx operator()(std::size_t j) const {
    if (shift_ == 0) return full_[j];
    return coarse_[j >> shift_] * fine_[j & mask_];
  }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  unsigned shift_ = 0;  // 0: full table
  std::size_t mask_ = 0;
  std::vector<cplx> full_;
  std::vector<cplx> coarse_;
  std::vector<cplx> fine_;
};

class BluesteinKernel;

/// Discrete Fourier transform of arbitrary length n, O(n log n).
///
/// Mixed-radix decimation in time over the prime factorisation of n with
/// dedicated radix-2/radix-4 butterflies, a direct butterfly for small odd
/// primes, and Bluestein's chirp convolution for prime factors above
/// kLargeRadix. The top-level butterflies run under OpenMP; no reduction is
/// involved, so output is identical at any thread count.
class DftPlan {
 public:
  static constexpr std::size_t kLargeRadix = 61;

  explicit DftPlan(std::size_t n);
  ~DftPlan();
  DftPlan(DftPlan&&) noexcept;
  DftPlan& operator=(DftPlan&&) noexcept;

  std::size_t size() const { return n_; }
  const std::vector<std::size_t>& factors() const { return factors_; }

  /// out[k] = sum_j in[j] e(-jk/n). in and out must not alias.
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  /// out[j] = (1/n) sum_k in[k] e(jk/n). in and out must not alias.
  void inverse(std::span<const cplx> in, std::span<cplx> out) const;

 private:
  void work(cplx* out, const cplx* in, std::size_t fstride, std::size_t level, bool top) const;
  void butterfly(cplx* out, std::size_t fstride, std::size_t level, bool top) const;

  std::size_t n_;
  std::vector<std::size_t> factors_;  // radices, outermost first
  std::vector<std::size_t> spans_;    // m at each level (product of later radices)
  TwiddleTable twiddles_;
  std::vector<std::shared_ptr<const BluesteinKernel>> bluestein_;  // per level, null if unused
};

namespace reference {
/// O(n^2) textbook DFT, for tests.
std::vector<cplx> naive_dft(std::span<const cplx> in);
}  // namespace reference

}  // namespace btw
