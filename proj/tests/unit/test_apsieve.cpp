#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "btw/apsieve.hpp"
#include "btw/errors.hpp"

using namespace btw;

TEST_SUITE("apsieve") {
  TEST_CASE("known prime counts") {
    CHECK(prime_pi(1) == 0);
    CHECK(prime_pi(2) == 1);
    CHECK(prime_pi(10) == 4);
    CHECK(prime_pi(100) == 25);
    CHECK(prime_pi(1000000) == 78498);
    CHECK(prime_pi(10000000) == 664579);
    CHECK(prime_pi(1000003) == oracle::prime_count(1000003));
  }

  TEST_CASE("residue counts match an independent sieve for all layouts") {
    const u64 x = 300007;
    const auto composite = oracle::odd_sieve(x);
    for (u64 q : {1ULL, 2ULL, 3ULL, 10ULL, 101ULL, 1009ULL}) {
      std::vector<u64> expect(q, 0);
      if (x >= 2) expect[2 % q]++;
      for (u64 n = 3; n <= x; n += 2) if (!composite[n / 2]) expect[n % q]++;
      for (std::size_t seg : {std::size_t{64}, std::size_t{1000}, std::size_t{1} << 16, std::size_t{1} << 20}) {
        for (int threads : {1, 2, 4}) {
          CAPTURE(q);
          CAPTURE(seg);
          CAPTURE(threads);
          REQUIRE(residue_counts(x, q, {seg, threads}) == expect);
        }
      }
      REQUIRE(reference::residue_counts_simple(x, q) == expect);
    }
  }

  TEST_CASE("segment boundaries at small x") {
    for (u64 x = 0; x < 200; ++x) {
      REQUIRE(prime_pi(x, {16, 3}) == oracle::prime_count(x));
    }
  }

  TEST_CASE("pi_ap and validation") {
    CHECK(pi_ap({100.0, 3, 1}) == 11);
    CHECK(pi_ap({100.0, 3, 2}) == 13);
    CHECK(pi_ap({100.9, 4, 3}) == 13);
    CHECK_THROWS_AS(pi_ap({100.0, 3, 0}), DomainError);
    CHECK_THROWS_AS(pi_ap({2.0, 3, 1}), DomainError);
  }

  TEST_CASE("Brun-Titchmarsh scan at (100, 3)") {
    const auto scan = bt_ratio_scan(100.0, PrimeModulus(3));
    CHECK(scan.total_primes == 25);
    CHECK(scan.argmax == 2);
    CHECK(scan.max_ratio == doctest::Approx(13 * 2 * std::log(100.0) / 100.0).epsilon(1e-12));
    CHECK(scan.max_ratio == doctest::Approx(1.1973).epsilon(1e-4));
    CHECK_THROWS_AS(bt_ratio_scan(100.0, PrimeModulus(101)), DomainError);
  }

  TEST_CASE("A(d) matches a brute-force lattice sum") {
    const double x = 2000.0;
    const auto w = SmoothWeight::for_scale(x);
    const u64 q = 7;
    for (u64 a : {1ULL, 3ULL}) {
      for (u64 d : {1ULL, 2ULL, 5ULL, 8ULL}) {
        const APCountConfig cfg{x, q, a, d};
        const u64 dbar = static_cast<u64>(oracle::inverse(static_cast<std::int64_t>(d), 7));
        const u64 r = a * dbar % q;
        double brute = 0;
        for (u64 n = 1; static_cast<double>(d * n) <= x + w.y() + 1; ++n) {
          if (n % q == r) brute += w(static_cast<double>(d * n));
        }
        CHECK(a_weighted(d, cfg, w) == doctest::Approx(brute).epsilon(1e-12));
        CHECK(remainder(d, cfg, w) == doctest::Approx(brute - (x - w.y()) / static_cast<double>(d * q)));
      }
    }
  }

  TEST_CASE("truncated remainder: H = 0, realness and stability") {
    const double x = 1e4;
    const auto w = SmoothWeight::for_scale(x);
    const APCountConfig cfg{x, 101, 1, 3};
    CHECK(remainder_truncated(3, cfg, w, 0).value == 0.0);
    const auto big = remainder_truncated(3, cfg, w, 1000);
    const auto bigger = remainder_truncated(3, cfg, w, 2000);
    CHECK(std::abs(big.imag) < 1e-9 * x);
    CHECK(std::abs(big.value - bigger.value) < 1e-9 * x);
    // With a cutoff far past the decay of Phi-hat, Poisson summation is exact.
    CHECK(std::abs(big.value - remainder(3, cfg, w)) < 1e-9 * x / (3 * 101));
  }

  TEST_CASE("poisson cutoff formula") {
    CHECK(poisson_cutoff(1e4, 0.1, 3981, 101) == doctest::Approx(std::pow(1e4, -0.9) * 3981 * 101));
  }
}
