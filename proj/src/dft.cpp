#include "btw/dft.hpp"

#include <omp.h>

#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <utility>

#include "btw/errors.hpp"

namespace btw {

namespace {

// e(-num/den) with num reduced first so the angle stays in [0, 2pi).
cplx unit_root_neg(unsigned __int128 num, std::size_t den) {
  const auto r = static_cast<std::size_t>(num % den);
  if (r == 0) return {1.0, 0.0};
  const double angle = -2.0 * std::numbers::pi * (static_cast<double>(r) / static_cast<double>(den));
  return {std::cos(angle), std::sin(angle)};
}

// Only the top level of a transform opens a parallel region; an inactive
// region on every recursive call costs more than the butterflies.
template <class F>
void for_each_index(bool parallel, std::size_t count, F&& f) {
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < count; ++i) f(i);
  } else {
    for (std::size_t i = 0; i < count; ++i) f(i);
  }
}

constexpr std::size_t kFullTwiddleLimit = std::size_t{1} << 16;
constexpr std::size_t kParallelSpan = 2048;

}  // namespace

TwiddleTable::TwiddleTable(std::size_t n) : n_(n) {
  if (n <= kFullTwiddleLimit) {
    full_.resize(n);
    for (std::size_t j = 0; j < n; ++j) full_[j] = unit_root_neg(j, n);
    return;
  }
  const std::size_t split = std::bit_ceil(static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
  shift_ = static_cast<unsigned>(std::countr_zero(split));
  mask_ = split - 1;
  fine_.resize(split);
  for (std::size_t j = 0; j < split; ++j) fine_[j] = unit_root_neg(j, n);
  const std::size_t coarse_len = (n >> shift_) + 1;
  coarse_.resize(coarse_len);
  for (std::size_t i = 0; i < coarse_len; ++i) {
    coarse_[i] = unit_root_neg(static_cast<unsigned __int128>(i) << shift_, n);
  }
}

/// Length-p DFT via chirp-z: X_k = w_k * sum_j (x_j w_j) conj(w_{k-j}),
/// w_k = e(-k^2 / 2p), evaluated as a power-of-two cyclic convolution.
class BluesteinKernel {
 public:
  explicit BluesteinKernel(std::size_t p) : p_(p), conv_len_(std::bit_ceil(2 * p - 1)), plan_(conv_len_) {
    chirp_.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      const auto k2 = static_cast<unsigned __int128>(k) * k;
      chirp_[k] = unit_root_neg(k2, 2 * p);
    }
    std::vector<cplx> b(conv_len_, cplx{});
    b[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < p; ++k) {
      b[k] = std::conj(chirp_[k]);
      b[conv_len_ - k] = std::conj(chirp_[k]);
    }
    kernel_hat_.resize(conv_len_);
    plan_.forward(b, kernel_hat_);
  }

  std::size_t length() const { return p_; }
  std::size_t work_length() const { return conv_len_; }

  // In-place forward DFT of data (length p); work1/work2 have conv_len_ slots.
  void apply(std::span<cplx> data, std::span<cplx> work1, std::span<cplx> work2) const {
    for (std::size_t j = 0; j < p_; ++j) work1[j] = data[j] * chirp_[j];
    for (std::size_t j = p_; j < conv_len_; ++j) work1[j] = cplx{};
    plan_.forward(work1, work2);
    // Inverse via conj(forward(conj(.))) folded into the pointwise product.
    for (std::size_t j = 0; j < conv_len_; ++j) work2[j] = std::conj(work2[j] * kernel_hat_[j]);
    plan_.forward(work2, work1);
    const double scale = 1.0 / static_cast<double>(conv_len_);
    for (std::size_t k = 0; k < p_; ++k) data[k] = std::conj(work1[k]) * scale * chirp_[k];
  }

 private:
  std::size_t p_;
  std::size_t conv_len_;
  DftPlan plan_;
  std::vector<cplx> chirp_;
  std::vector<cplx> kernel_hat_;
};

DftPlan::DftPlan(std::size_t n) : n_(n), twiddles_(n == 0 ? 1 : n) {
  if (n == 0) throw DomainError("DFT length must be positive");
  std::size_t rest = n;
  while (rest % 4 == 0) {
    factors_.push_back(4);
    rest /= 4;
  }
  while (rest % 2 == 0) {
    factors_.push_back(2);
    rest /= 2;
  }
  for (std::size_t p = 3; p * p <= rest; p += 2) {
    while (rest % p == 0) {
      factors_.push_back(p);
      rest /= p;
    }
  }
  if (rest > 1) factors_.push_back(rest);
  if (factors_.empty()) factors_.push_back(1);

  spans_.resize(factors_.size());
  std::size_t m = 1;
  for (std::size_t level = factors_.size(); level-- > 0;) {
    spans_[level] = m;
    m *= factors_[level];
  }

  bluestein_.resize(factors_.size());
  for (std::size_t level = 0; level < factors_.size(); ++level) {
    const std::size_t p = factors_[level];
    if (p <= kLargeRadix) continue;
    for (std::size_t prev = 0; prev < level; ++prev) {
      if (factors_[prev] == p) bluestein_[level] = bluestein_[prev];
    }
    if (!bluestein_[level]) bluestein_[level] = std::make_shared<BluesteinKernel>(p);
  }
}

DftPlan::~DftPlan() = default;
DftPlan::DftPlan(DftPlan&&) noexcept = default;
DftPlan& DftPlan::operator=(DftPlan&&) noexcept = default;

void DftPlan::forward(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.size() != n_ || out.size() != n_) throw DomainError("DFT buffer length mismatch");
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  work(out.data(), in.data(), 1, 0, true);
}

void DftPlan::inverse(std::span<const cplx> in, std::span<cplx> out) const {
  std::vector<cplx> conj_in(in.begin(), in.end());
  for (cplx& v : conj_in) v = std::conj(v);
  forward(conj_in, out);
  const double scale = 1.0 / static_cast<double>(n_);
  for (cplx& v : out) v = std::conj(v) * scale;
}

void DftPlan::work(cplx* out, const cplx* in, std::size_t fstride, std::size_t level, bool top) const {
  const std::size_t p = factors_[level];
  const std::size_t m = spans_[level];
  if (m == 1) {
    for (std::size_t k = 0; k < p; ++k) out[k] = in[k * fstride];
  } else {
    for_each_index(top && m >= kParallelSpan, p, [&](std::size_t k) {
      work(out + k * m, in + k * fstride, fstride * p, level + 1, false);
    });
  }
  butterfly(out, fstride, level, top);
}

void DftPlan::butterfly(cplx* out, std::size_t fstride, std::size_t level, bool top) const {
  const std::size_t p = factors_[level];
  const std::size_t m = spans_[level];
  const bool parallel = top && m >= kParallelSpan;
  const TwiddleTable& tw = twiddles_;

  if (p == 2) {
    for_each_index(parallel, m, [&](std::size_t u) {
      const cplx t = out[u + m] * tw(u * fstride);
      out[u + m] = out[u] - t;
      out[u] += t;
    });
    return;
  }

  if (p == 4) {
    for_each_index(parallel, m, [&](std::size_t u) {
      const cplx s0 = out[u + m] * tw(u * fstride);
      const cplx s1 = out[u + 2 * m] * tw(2 * u * fstride);
      const cplx s2 = out[u + 3 * m] * tw(3 * u * fstride);
      const cplx s5 = out[u] - s1;
      const cplx a = out[u] + s1;
      const cplx s3 = s0 + s2;
      const cplx s4 = s0 - s2;
      out[u + 2 * m] = a - s3;
      out[u] = a + s3;
      out[u + m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
      out[u + 3 * m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
    });
    return;
  }

  if (p == 1) return;

  const std::size_t n = n_;
  if (const auto& kernel = bluestein_[level]) {
    auto run = [&](std::size_t lo, std::size_t hi) {
      std::vector<cplx> scratch(p);
      std::vector<cplx> work1(kernel->work_length());
      std::vector<cplx> work2(kernel->work_length());
      for (std::size_t u = lo; u < hi; ++u) {
        for (std::size_t j = 0; j < p; ++j) {
          scratch[j] = out[u + j * m] * tw((fstride * u * j) % n);
        }
        kernel->apply(scratch, work1, work2);
        for (std::size_t k = 0; k < p; ++k) out[u + k * m] = scratch[k];
      }
    };
    if (parallel) {
#pragma omp parallel
      {
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
        const auto nt = static_cast<std::size_t>(omp_get_num_threads());
        run(m * t / nt, m * (t + 1) / nt);
      }
    } else {
      run(0, m);
    }
    return;
  }

  // Direct butterfly for small odd radices (p <= kLargeRadix).
  for_each_index(parallel, m, [&](std::size_t u) {
    std::array<cplx, kLargeRadix> scratch;
    for (std::size_t j = 0; j < p; ++j) scratch[j] = out[u + j * m];
    for (std::size_t k1 = 0; k1 < p; ++k1) {
      const std::size_t k = u + k1 * m;
      const std::size_t step = fstride * k;
      std::size_t idx = 0;
      cplx acc = scratch[0];
      for (std::size_t j = 1; j < p; ++j) {
        idx += step;
        if (idx >= n) idx -= n;
        acc += scratch[j] * tw(idx);
      }
      out[k] = acc;
    }
  });
}

namespace reference {

std::vector<cplx> naive_dft(std::span<const cplx> in) {
  const std::size_t n = in.size();
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{};
    for (std::size_t j = 0; j < n; ++j) {
      acc += in[j] * unit_root_neg(static_cast<unsigned __int128>(j) * k, n);
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace reference

}  // namespace btw
