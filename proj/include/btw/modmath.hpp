#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace btw {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using cplx = std::complex<double>;

inline u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

u64 pow_mod(u64 base, u64 exp, u64 m);

/// Montgomery arithmetic modulo an odd 64-bit n. Values in Montgomery form
/// are x*2^64 mod n.
class Montgomery64 {
 public:
  explicit Montgomery64(u64 n);

  u64 modulus() const { return n_; }
  u64 to_mont(u64 x) const { return reduce(static_cast<u128>(x % n_) * r2_); }
  u64 from_mont(u64 x) const { return reduce(x); }
  u64 one() const { return one_; }

  u64 mul(u64 a, u64 b) const { return reduce(static_cast<u128>(a) * b); }
  u64 pow(u64 base_mont, u64 exp) const;

 private:
  // REDC for t < n*2^64; valid for every odd n < 2^64.
  u64 reduce(u128 t) const {
    const u64 m = static_cast<u64>(t) * inv_;
    const u64 hi = static_cast<u64>(t >> 64);
    const u64 mn = static_cast<u64>((static_cast<u128>(m) * n_) >> 64);
    return hi >= mn ? hi - mn : hi + (n_ - mn);
  }

  u64 n_;
  u64 inv_;  // n^{-1} mod 2^64
  u64 r2_;   // 2^128 mod n
  u64 one_;  // 2^64 mod n
};

/// Deterministic primality for every 64-bit input (Miller-Rabin on the
/// first twelve prime bases, which is exact below 3.3e24).
/// Throws DomainError for n < 2.
bool is_prime(u64 n);

/// Distinct prime factors of n >= 1 in increasing order (trial division,
/// intended for n up to ~1e12).
std::vector<u64> prime_factors(u64 n);

/// A certified prime modulus. Residues handed out by this class are always
/// canonical in [0, q-1].
class PrimeModulus {
 public:
  explicit PrimeModulus(u64 q);

  u64 value() const { return q_; }
  double sqrt_q() const { return sqrt_q_; }

  u64 reduce(i64 t) const {
    // Unsigned throughout: q may exceed 2^63.
    if (t >= 0) return static_cast<u64>(t) % q_;
    const u64 r = (0 - static_cast<u64>(t)) % q_;
    return r == 0 ? 0 : q_ - r;
  }
  u64 reduce_u(u64 t) const { return t % q_; }

  u64 mul(u64 a, u64 b) const {
    return narrow_ ? (a * b) % q_ : mul_mod(a, b, q_);
  }
  u64 add(u64 a, u64 b) const {
    const u64 s = a + b;
    return (s >= q_ || s < a) ? s - q_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + (q_ - b); }
  u64 pow(u64 base, u64 exp) const;

  /// x^{-1} mod q; throws DomainError("non-invertible") when q | x.
  u64 inverse(i64 x) const;

  /// Smallest generator of the multiplicative group (Z/qZ)^*.
  u64 primitive_root() const;

  /// e(1/q) = (cos 2pi/q, sin 2pi/q).
  cplx unit_root_seed() const { return unit_root_; }

  friend bool operator==(const PrimeModulus& a, const PrimeModulus& b) {
    return a.q_ == b.q_;
  }

 private:
  u64 q_;
  bool narrow_;  // q < 2^32: products fit in 64 bits
  double sqrt_q_;
  cplx unit_root_;
};

u64 mod_inverse(i64 x, const PrimeModulus& q);

/// e(t/q) with t reduced mod q before the single trigonometric call.
cplx e_q(i64 t, const PrimeModulus& q);

/// e(t) = exp(2 pi i t) for real t.
cplx e(double t);

/// Table inv[x] = x^{-1} mod q for 1 <= x < q (inv[0] = 0). O(q) time.
std::vector<u64> inverse_table(const PrimeModulus& q);

}  // namespace btw
