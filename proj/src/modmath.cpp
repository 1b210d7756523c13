#include "btw/modmath.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "btw/errors.hpp"

namespace btw {

u64 pow_mod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

Montgomery64::Montgomery64(u64 n) : n_(n) {
  if (n % 2 == 0) throw DomainError("Montgomery modulus must be odd");
  // Newton iteration: each step doubles the number of correct low bits.
  u64 inv = n;
  for (int i = 0; i < 5; ++i) inv *= 2 - n * inv;
  inv_ = inv;
  one_ = static_cast<u64>((static_cast<u128>(1) << 64) % n);
  r2_ = static_cast<u64>(static_cast<u128>(one_) * one_ % n);
}

u64 Montgomery64::pow(u64 base_mont, u64 exp) const {
  u64 result = one_;
  while (exp > 0) {
    if (exp & 1) result = mul(result, base_mont);
    base_mont = mul(base_mont, base_mont);
    exp >>= 1;
  }
  return result;
}

namespace {

constexpr std::array<u64, 12> kWitnesses = {2,  3,  5,  7,  11, 13,
                                            17, 19, 23, 29, 31, 37};

bool strong_probable_prime(const Montgomery64& mont, u64 n, u64 witness) {
  const u64 n_minus_1 = n - 1;
  const int s = std::countr_zero(n_minus_1);
  const u64 d = n_minus_1 >> s;
  const u64 one = mont.one();
  const u64 minus_one = mont.to_mont(n_minus_1);
  u64 x = mont.pow(mont.to_mont(witness), d);
  if (x == one || x == minus_one) return true;
  for (int r = 1; r < s; ++r) {
    x = mont.mul(x, x);
    if (x == minus_one) return true;
    if (x == one) return false;
  }
  return false;
}

}  // namespace

bool is_prime(u64 n) {
  if (n < 2) throw DomainError("is_prime requires n >= 2, got " + std::to_string(n));
  for (u64 p : kWitnesses) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  if (n < 41 * 41) return true;
  const Montgomery64 mont(n);
  for (u64 w : kWitnesses) {
    if (!strong_probable_prime(mont, n, w)) return false;
  }
  return true;
}

std::vector<u64> prime_factors(u64 n) {
  std::vector<u64> out;
  for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

PrimeModulus::PrimeModulus(u64 q) : q_(q), narrow_(q < (u64{1} << 32)) {
  if (q < 2 || !is_prime(q)) {
    throw DomainError("modulus " + std::to_string(q) + " is not prime");
  }
  sqrt_q_ = std::sqrt(static_cast<double>(q));
  const double angle = 2.0 * std::numbers::pi / static_cast<double>(q);
  unit_root_ = {std::cos(angle), std::sin(angle)};
}

u64 PrimeModulus::pow(u64 base, u64 exp) const {
  base %= q_;
  u64 result = 1 % q_;
  while (exp > 0) {
    if (exp & 1) result = mul(result, base);
    base = mul(base, base);
    exp >>= 1;
  }
  return result;
}

u64 PrimeModulus::inverse(i64 x) const {
  const u64 r = reduce(x);
  if (r == 0) throw DomainError("non-invertible: " + std::to_string(x) + " mod " + std::to_string(q_));
  // Extended Euclid on (r, q) with signed 128-bit cofactors.
  __int128 old_r = r, cur_r = q_;
  __int128 old_s = 1, cur_s = 0;
  while (cur_r != 0) {
    const __int128 quot = old_r / cur_r;
    const __int128 next_r = old_r - quot * cur_r;
    old_r = cur_r;
    cur_r = next_r;
    const __int128 next_s = old_s - quot * cur_s;
    old_s = cur_s;
    cur_s = next_s;
  }
  __int128 inv = old_s % static_cast<__int128>(q_);
  if (inv < 0) inv += q_;
  return static_cast<u64>(inv);
}

u64 PrimeModulus::primitive_root() const {
  if (q_ == 2) return 1;
  const std::vector<u64> factors = prime_factors(q_ - 1);
  for (u64 g = 2; g < q_; ++g) {
    bool generator = true;
    for (u64 p : factors) {
      if (pow(g, (q_ - 1) / p) == 1) {
        generator = false;
        break;
      }
    }
    if (generator) return g;
  }
  throw DomainError("no primitive root found");
}

u64 mod_inverse(i64 x, const PrimeModulus& q) { return q.inverse(x); }

cplx e_q(i64 t, const PrimeModulus& q) {
  const u64 r = q.reduce(t);
  if (r == 0) return {1.0, 0.0};
  const double angle = 2.0 * std::numbers::pi * (static_cast<double>(r) / static_cast<double>(q.value()));
  return {std::cos(angle), std::sin(angle)};
}

cplx e(double t) {
  const double frac = t - std::round(t);
  const double angle = 2.0 * std::numbers::pi * frac;
  return {std::cos(angle), std::sin(angle)};
}

std::vector<u64> inverse_table(const PrimeModulus& q) {
  const u64 n = q.value();
  std::vector<u64> inv(n, 0);
  if (n > 1) inv[1] = 1;
  for (u64 x = 2; x < n; ++x) {
    // inv[x] = -(n / x) * inv[n mod x]
    inv[x] = q.mul(n - n / x, inv[n % x]);
  }
  return inv;
}

}  // namespace btw
