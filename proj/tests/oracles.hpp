#pragma once

// Independent reference implementations for the tests. None of these call
// into btw except for plain value types; they are slow on purpose.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

inline bool is_prime_trial(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

// Extended Euclid; returns x with a x = 1 mod m, or 0 if none.
inline std::int64_t inverse(std::int64_t a, std::int64_t m) {
  a %= m;
  if (a < 0) a += m;
  std::int64_t r0 = m, r1 = a, s0 = 0, s1 = 1;
  while (r1 != 0) {
    const std::int64_t t = r0 / r1;
    std::int64_t tmp = r0 - t * r1;
    r0 = r1;
    r1 = tmp;
    tmp = s0 - t * s1;
    s0 = s1;
    s1 = tmp;
  }
  if (r0 != 1) return 0;
  return s0 < 0 ? s0 + m : s0;
}

inline std::int64_t mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

// S(m,n;q) = sum_{x mod q, (x,q)=1} e((m x + n x^{-1})/q), summed in long double.
inline double kloosterman(std::int64_t m, std::int64_t n, std::int64_t q) {
  long double re = 0.0L;
  const long double w = 2.0L * std::numbers::pi_v<long double> / static_cast<long double>(q);
  for (std::int64_t x = 1; x < q; ++x) {
    const std::int64_t xi = inverse(x, q);
    if (xi == 0) continue;
    const std::int64_t t = mod(mod(m, q) * x + mod(n, q) * xi, q);
    re += std::cos(w * static_cast<long double>(t));
  }
  return static_cast<double>(re);
}

// Kl(z) for all z mod q at once via cosine tables: O(q^2), no FFT.
inline std::vector<double> kl_all(std::int64_t q) {
  std::vector<double> cosv(static_cast<std::size_t>(q));
  for (std::int64_t t = 0; t < q; ++t) {
    cosv[static_cast<std::size_t>(t)] =
        std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(q));
  }
  std::vector<std::int64_t> inv(static_cast<std::size_t>(q), 0);
  for (std::int64_t x = 1; x < q; ++x) inv[static_cast<std::size_t>(x)] = inverse(x, q);
  std::vector<double> out(static_cast<std::size_t>(q));
  const double sq = std::sqrt(static_cast<double>(q));
  for (std::int64_t z = 0; z < q; ++z) {
    long double acc = 0.0L;
    std::int64_t zx = 0;
    for (std::int64_t x = 1; x < q; ++x) {
      zx += z;
      if (zx >= q) zx -= q;
      std::int64_t t = zx + inv[static_cast<std::size_t>(x)];
      if (t >= q) t -= q;
      acc += cosv[static_cast<std::size_t>(t)];
    }
    out[static_cast<std::size_t>(z)] = static_cast<double>(acc) / sq;
  }
  return out;
}

// Byte-per-odd-number sieve of Eratosthenes over [0, n], non-segmented.
inline std::vector<std::uint8_t> odd_sieve(std::uint64_t n) {
  std::vector<std::uint8_t> composite(n / 2 + 1, 0);  // index i is 2i+1
  if (!composite.empty()) composite[0] = 1;            // 1 is not prime
  for (std::uint64_t p = 3; p * p <= n; p += 2) {
    if (composite[p / 2]) continue;
    for (std::uint64_t m = p * p; m <= n; m += 2 * p) composite[m / 2] = 1;
  }
  return composite;
}

inline std::uint64_t prime_count(std::uint64_t n) {
  if (n < 2) return 0;
  const auto c = odd_sieve(n);
  std::uint64_t count = 1;  // the prime 2
  for (std::uint64_t i = 1; 2 * i + 1 <= n; ++i) count += c[i] == 0;
  return count;
}

inline std::uint64_t gcd(std::uint64_t a, std::uint64_t b) {
  while (b != 0) {
    const std::uint64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Term-by-term quintilinear sum with every Kloosterman sum evaluated by
// kloosterman() above. Cfg needs q, a, H, K, N and beta_at(n).
template <class Cfg>
std::complex<double> quint_sum(const Cfg& cfg) {
  const auto q = static_cast<std::int64_t>(cfg.q.value());
  const auto a = static_cast<std::int64_t>(cfg.a);
  std::complex<double> acc = 0;
  for (std::int64_t k = 1; k <= static_cast<std::int64_t>(cfg.K); ++k) {
    for (std::uint64_t n1 = cfg.N + 1; n1 <= 2 * cfg.N; ++n1) {
      for (std::uint64_t n2 = cfg.N + 1; n2 <= 2 * cfg.N; ++n2) {
        const std::int64_t i1 = inverse(static_cast<std::int64_t>(n1), q);
        const std::int64_t i2 = inverse(static_cast<std::int64_t>(n2), q);
        const std::complex<double> bb = cfg.beta_at(n1) * std::conj(cfg.beta_at(n2));
        for (std::int64_t h1 = 1; h1 <= static_cast<std::int64_t>(cfg.H); ++h1) {
          for (std::int64_t h2 = 1; h2 <= static_cast<std::int64_t>(cfg.H); ++h2) {
            const std::int64_t u = mod(a * mod(h1 * i1 - h2 * i2, q), q);
            acc += bb * kloosterman(u, k, q);
          }
        }
      }
    }
  }
  return acc;
}

}  // namespace oracle
