#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "btw/modmath.hpp"
#include "btw/smoothweight.hpp"

namespace btw {

/// Inputs for pi(x;q,a) and the weighted counts A(d). q = 1 means the
/// unrestricted count. q need not be prime for counting, but the Poisson
/// side (d-bar, e(./q)) requires a prime q.
struct APCountConfig {
  double x = 0.0;
  u64 q = 1;
  u64 a = 0;
  std::optional<u64> d;

  void validate() const;  // x >= 3, gcd(a,q) = 1, gcd(d,q) = 1
  u64 limit() const;      // floor(x)
};

/// Primality bits for the odd numbers of [lo, hi).
class SieveSegment {
 public:
  SieveSegment(u64 lo, u64 hi) : lo_(lo), hi_(hi) {}

  u64 lo() const { return lo_; }
  u64 hi() const { return hi_; }
  /// Valid for odd n in [lo, hi).
  bool is_prime(u64 n) const {
    const u64 i = (n - first_odd()) / 2;
    return bits_[i / 64] >> (i % 64) & 1u;
  }
  u64 first_odd() const { return lo_ | 1u; }

  /// Marks odd composites using base primes (all odd primes <= sqrt(hi)).
  void sieve(const std::vector<u64>& base_primes);

  template <class F>
  void for_each_prime(F&& f) const {
    const u64 base = first_odd();
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      while (word != 0) {
        const int bit = __builtin_ctzll(word);
        word &= word - 1;
        f(base + 2 * (64 * w + static_cast<u64>(bit)));
      }
    }
  }

 private:
  u64 lo_, hi_;
  std::vector<std::uint64_t> bits_;
};

struct SieveOptions {
  std::size_t segment_size = std::size_t{1} << 20;  // numbers per segment
  int threads = 0;                                   // 0: OpenMP default
};

/// Odd primes up to limit by a plain sieve (used for base primes).
std::vector<u64> odd_primes_up_to(u64 limit);

/// counts[r] = #{p <= x prime : p = r mod q}, by an odd-only segmented
/// sieve. Segments run in parallel with per-thread counters merged in
/// thread order (integer sums, so deterministic).
std::vector<u64> residue_counts(u64 x, u64 q, const SieveOptions& opts = {});

u64 prime_pi(u64 x, const SieveOptions& opts = {});

/// Exact pi(x;q,a).
u64 pi_ap(const APCountConfig& cfg, const SieveOptions& opts = {});

struct BTScan {
  u64 x = 0;
  double x_real = 0.0;
  u64 q = 0;
  double log_x = 0.0;
  std::vector<u64> counts;  // indexed by residue
  double max_ratio = 0.0;
  u64 argmax = 0;
  u64 total_primes = 0;  // sum over all residues = pi(x)

  /// pi(x;q,a) phi(q) log x / x.
  double ratio(u64 a) const;
};

/// Max over (a,q) = 1 of pi(x;q,a) phi(q) log x / x. Throws DomainError if q >= x.
BTScan bt_ratio_scan(double x, const PrimeModulus& q, const SieveOptions& opts = {});

namespace reference {
/// Unsegmented single-threaded sieve over [0, x]; counts by residue.
std::vector<u64> residue_counts_simple(u64 x, u64 q);
}  // namespace reference

/// A(d) = sum_{n = a d-bar mod q} Phi(dn), pairwise-summed over the lattice
/// points in the support.
double a_weighted(u64 d, const APCountConfig& cfg, const SmoothWeight& w);

/// r(d) = A(d) - Phi-hat(0)/(dq). Phi-hat(0) = x - y is the mass of the weight.
double remainder(u64 d, const APCountConfig& cfg, const SmoothWeight& w);

struct TruncatedRemainder {
  double value = 0.0;   // real part
  double imag = 0.0;    // imaginary part of the full (h and -h) sum
  double scale = 0.0;   // (1/(dq)) sum |terms|
  std::uint64_t H = 0;
};

/// (1/(dq)) sum_{0<|h|<=H} Phi-hat(h/(dq)) e(a h d-bar / q), both signs of h
/// summed separately so realness is a genuine check.
TruncatedRemainder remainder_truncated(u64 d, const APCountConfig& cfg, const SmoothWeight& w,
                                       std::uint64_t H);

/// H = x^{eps-1} M N q.
double poisson_cutoff(double x, double eps, double MN, double q);

}  // namespace btw
