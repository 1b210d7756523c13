#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "btw/modmath.hpp"

namespace btw {

/// Direct O(q) evaluation of S(m,n;q) using cached inverses and roots of
/// unity. Intended for q < 2^32; construction costs O(q) memory.
class KloostermanEvaluator {
 public:
  explicit KloostermanEvaluator(const PrimeModulus& q);

  const PrimeModulus& modulus() const { return q_; }

  /// The complex sum before the imaginary part is discarded.
  cplx raw_sum(i64 m, i64 n) const;
  /// S(m,n;q); throws NumericalError if |Im| > 1e-6 sqrt(q).
  double sum(i64 m, i64 n) const;
  /// Kl(z,q) = S(z,1;q)/sqrt(q).
  double normalized(i64 z) const { return sum(z, 1) / q_.sqrt_q(); }

 private:
  PrimeModulus q_;
  std::vector<u64> inverses_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

double kloosterman_direct(i64 m, i64 n, const PrimeModulus& q);
double kl(i64 z, const PrimeModulus& q);

/// Dense table of Kl(a,q) for all residues a mod q.
class KloostermanTable {
 public:
  static constexpr std::uint64_t kDefaultMaxModulus = 100'000'000;
  static constexpr char kMagic[9] = "BTWKLTB1";

  KloostermanTable(const PrimeModulus& q, std::vector<double> values);

  const PrimeModulus& modulus() const { return q_; }
  std::span<const double> values() const { return values_; }
  double operator[](u64 a) const { return values_[a]; }
  double at(i64 z) const { return values_[q_.reduce(z)]; }

  /// The binary layout: 8 magic bytes, q as little-endian u64, then q
  /// little-endian IEEE-754 doubles.
  void save_binary(const std::filesystem::path& path) const;
  static KloostermanTable load_binary(const std::filesystem::path& path);
  /// CSV with header "a,kl".
  void write_csv(std::ostream& out) const;

 private:
  PrimeModulus q_;
  std::vector<double> values_;
};

/// O(q log q) construction. For a = g^i (g a primitive root) the index
/// substitution x = g^{-j} turns S(a,1;q) into the cyclic self-convolution
/// of u_j = e(g^j/q) over Z/(q-1), computed with two length-(q-1) DFTs.
/// Throws ResourceError if q exceeds max_modulus.
KloostermanTable build_table(const PrimeModulus& q,
                             std::uint64_t max_modulus = KloostermanTable::kDefaultMaxModulus);

namespace reference {
/// O(q^2) serial tabulation by direct summation.
KloostermanTable build_table_direct(const PrimeModulus& q);
}  // namespace reference

struct WeilReport {
  std::uint64_t trials = 0;
  double max_ratio = 0.0;  // max |S(m,n;q)| / (2 sqrt q)
  i64 argmax_m = 0;
  i64 argmax_n = 0;
  bool within_bound = true;
};

/// Samples (m,n) with q not dividing mn and records |S|/(2 sqrt q).
WeilReport weil_check(const PrimeModulus& q, std::uint64_t trials, std::uint64_t seed);

}  // namespace btw
