#include "btw/apsieve.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "btw/errors.hpp"
#include "btw/summation.hpp"

namespace btw {

void APCountConfig::validate() const {
  if (!(x >= 3.0)) throw DomainError("pi(x;q,a) needs x >= 3");
  if (q == 0) throw DomainError("modulus must be positive");
  if (std::gcd(a % q, q) != 1 && q != 1) {
    throw DomainError("gcd(a, q) = " + std::to_string(std::gcd(a % q, q)) + " > 1");
  }
  if (d && (*d == 0 || std::gcd(*d, q) != 1)) {
    throw DomainError("gcd(d, q) > 1");
  }
}

u64 APCountConfig::limit() const { return static_cast<u64>(std::floor(x)); }

void SieveSegment::sieve(const std::vector<u64>& base_primes) {
  const u64 first = first_odd();
  const u64 count = hi_ > first ? (hi_ - first + 1) / 2 : 0;
  bits_.assign((count + 63) / 64, ~std::uint64_t{0});
  if (count % 64 != 0) bits_.back() = (std::uint64_t{1} << (count % 64)) - 1;
  auto clear = [&](u64 n) {
    const u64 i = (n - first) / 2;
    bits_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  };
  if (count > 0 && first == 1) clear(1);
  for (u64 p : base_primes) {
    const u64 square = p * p;
    if (square >= hi_) break;
    u64 start = std::max(square, (lo_ + p - 1) / p * p);
    if (start % 2 == 0) start += p;
    for (u64 n = start; n < hi_; n += 2 * p) clear(n);
  }
}

std::vector<u64> odd_primes_up_to(u64 limit) {
  std::vector<u64> primes;
  if (limit < 3) return primes;
  std::vector<bool> composite(limit / 2 + 1, false);  // index i <-> 2i+1
  for (u64 i = 1; 2 * i + 1 <= limit; ++i) {
    if (composite[i]) continue;
    const u64 p = 2 * i + 1;
    primes.push_back(p);
    for (u64 n = p * p; n <= limit; n += 2 * p) composite[n / 2] = true;
  }
  return primes;
}

std::vector<u64> residue_counts(u64 x, u64 q, const SieveOptions& opts) {
  if (q == 0) throw DomainError("modulus must be positive");
  std::vector<u64> counts(q, 0);
  if (x < 2) return counts;
  ++counts[2 % q];
  const u64 end = x + 1;
  const u64 root = static_cast<u64>(std::sqrt(static_cast<double>(x))) + 1;
  const std::vector<u64> base = odd_primes_up_to(root);
  const u64 seg = std::max<u64>(128, opts.segment_size & ~u64{1});
  const u64 segments = (end + seg - 1) / seg;
  const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();

#pragma omp parallel num_threads(threads)
  {
    std::vector<u64> local(q, 0);
#pragma omp for schedule(dynamic, 4)
    for (u64 s = 0; s < segments; ++s) {
      const u64 lo = s * seg;
      const u64 hi = std::min(end, lo + seg);
      SieveSegment segment(lo, hi);
      segment.sieve(base);
      segment.for_each_prime([&](u64 p) { ++local[p % q]; });
    }
#pragma omp critical(btw_residue_merge)
    for (u64 r = 0; r < q; ++r) counts[r] += local[r];
  }
  return counts;
}

u64 prime_pi(u64 x, const SieveOptions& opts) { return residue_counts(x, 1, opts)[0]; }

u64 pi_ap(const APCountConfig& cfg, const SieveOptions& opts) {
  cfg.validate();
  const std::vector<u64> counts = residue_counts(cfg.limit(), cfg.q, opts);
  return counts[cfg.a % cfg.q];
}

double BTScan::ratio(u64 a) const {
  return static_cast<double>(counts[a]) * static_cast<double>(q - 1) * log_x / static_cast<double>(x_real);
}

BTScan bt_ratio_scan(double x, const PrimeModulus& q, const SieveOptions& opts) {
  if (!(static_cast<double>(q.value()) < x)) throw DomainError("bt_ratio_scan needs q < x");
  if (!(x >= 3.0)) throw DomainError("bt_ratio_scan needs x >= 3");
  BTScan scan;
  scan.x = static_cast<u64>(std::floor(x));
  scan.x_real = x;
  scan.q = q.value();
  scan.log_x = std::log(x);
  scan.counts = residue_counts(scan.x, q.value(), opts);
  scan.total_primes = std::accumulate(scan.counts.begin(), scan.counts.end(), u64{0});
  for (u64 a = 1; a < q.value(); ++a) {
    const double r = scan.ratio(a);
    if (r > scan.max_ratio) {
      scan.max_ratio = r;
      scan.argmax = a;
    }
  }
  return scan;
}

namespace reference {

std::vector<u64> residue_counts_simple(u64 x, u64 q) {
  std::vector<u64> counts(q, 0);
  if (x < 2) return counts;
  std::vector<bool> composite(x + 1, false);
  for (u64 n = 2; n <= x; ++n) {
    if (composite[n]) continue;
    ++counts[n % q];
    if (n <= x / n) {
      for (u64 k = n * n; k <= x; k += n) composite[k] = true;
    }
  }
  return counts;
}

}  // namespace reference

namespace {

PrimeModulus poisson_modulus(const APCountConfig& cfg) {
  if (cfg.q < 2) throw DomainError("weighted counts need a prime modulus q >= 2");
  return PrimeModulus(cfg.q);
}

void check_d(u64 d, const PrimeModulus& q) {
  if (d == 0 || d % q.value() == 0) throw DomainError("gcd(d, q) > 1");
}

}  // namespace

double a_weighted(u64 d, const APCountConfig& cfg, const SmoothWeight& w) {
  const PrimeModulus q = poisson_modulus(cfg);
  check_d(d, q);
  if (cfg.a % q.value() == 0) throw DomainError("gcd(a, q) > 1");
  const u64 residue = q.mul(q.reduce_u(cfg.a), q.inverse(static_cast<i64>(d % q.value())));
  const double lo = w.bump().support_lo() / static_cast<double>(d);
  const double hi = w.bump().support_hi() / static_cast<double>(d);
  const u64 n_lo = static_cast<u64>(std::max(1.0, std::ceil(lo)));
  const u64 n_hi = static_cast<u64>(std::floor(hi));
  if (n_hi < n_lo) return 0.0;
  const u64 first = n_lo + q.sub(residue, n_lo % q.value());
  PairwiseSum<double> acc;
  for (u64 n = first; n <= n_hi; n += q.value()) {
    acc.add(w(static_cast<double>(d) * static_cast<double>(n)));
  }
  return acc.total();
}

double remainder(u64 d, const APCountConfig& cfg, const SmoothWeight& w) {
  return a_weighted(d, cfg, w) - w.mass() / (static_cast<double>(d) * static_cast<double>(cfg.q));
}

TruncatedRemainder remainder_truncated(u64 d, const APCountConfig& cfg, const SmoothWeight& w,
                                       std::uint64_t H) {
  const PrimeModulus q = poisson_modulus(cfg);
  check_d(d, q);
  const u64 dbar = q.inverse(static_cast<i64>(d % q.value()));
  const u64 a = q.reduce_u(cfg.a);
  const double dq = static_cast<double>(d) * static_cast<double>(q.value());
  PairwiseSum<cplx> sum;
  PairwiseSum<double> magnitude;
  for (std::uint64_t h = 1; h <= H; ++h) {
    for (const i64 sign : {1, -1}) {
      const i64 hs = sign * static_cast<i64>(h);
      const cplx term = w.fourier(static_cast<double>(hs) / dq) *
                        e_q(static_cast<i64>(q.mul(q.mul(a, q.reduce(hs)), dbar)), q);
      sum.add(term);
      magnitude.add(std::abs(term));
    }
  }
  TruncatedRemainder out;
  const cplx total = sum.total() / dq;
  out.value = total.real();
  out.imag = total.imag();
  out.scale = magnitude.total() / dq;
  out.H = H;
  if (std::abs(out.imag) > 1e-6 * std::max(out.scale, 1e-300)) {
    throw NumericalError("truncated remainder is not real: imag = " + std::to_string(out.imag));
  }
  return out;
}

double poisson_cutoff(double x, double eps, double MN, double q) {
  return std::pow(x, eps - 1.0) * MN * q;
}

}  // namespace btw
