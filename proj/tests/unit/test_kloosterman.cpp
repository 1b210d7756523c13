#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../oracles.hpp"
#include "btw/errors.hpp"
#include "btw/kloosterman.hpp"

using namespace btw;

TEST_SUITE("kloosterman") {
  TEST_CASE("S(1,1;5) in closed form") {
    // x in {1,2,3,4}: x + 1/x = 2, 2+3, 3+2, 4+4 -> e(2/5) + 2e(0) + e(3/5).
    const double expect = 2.0 + 2.0 * std::cos(4.0 * std::numbers::pi / 5.0);
    CHECK(kloosterman_direct(1, 1, PrimeModulus(5)) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(kl(1, PrimeModulus(5)) == doctest::Approx(0.17082039324993684).epsilon(1e-13));
  }

  TEST_CASE("direct evaluator matches the oracle sum") {
    for (u64 q : {3ULL, 7ULL, 101ULL, 997ULL}) {
      const PrimeModulus p(q);
      const KloostermanEvaluator ev(p);
      for (i64 m : {0, 1, 2, 5, -3, 77}) {
        for (i64 n : {1, 3, -1, 0}) {
          REQUIRE(ev.sum(m, n) == doctest::Approx(oracle::kloosterman(m, n, static_cast<i64>(q))).epsilon(1e-10));
        }
      }
      // Ramanujan sums at (0,0) and (u,0).
      CHECK(ev.sum(0, 0) == doctest::Approx(static_cast<double>(q - 1)));
      CHECK(ev.sum(2, 0) == doctest::Approx(-1.0));
    }
  }

  TEST_CASE("fast table matches the cosine-table oracle") {
    for (u64 q : {2ULL, 3ULL, 5ULL, 101ULL, 1009ULL, 4099ULL}) {
      CAPTURE(q);
      const PrimeModulus p(q);
      const auto table = build_table(p);
      const auto expect = oracle::kl_all(static_cast<i64>(q));
      double err = 0;
      for (u64 a = 0; a < q; ++a) err = std::max(err, std::abs(table[a] - expect[a]));
      REQUIRE(err < 1e-11);
    }
  }

  TEST_CASE("direct table and fast table agree") {
    const PrimeModulus p(211);
    const auto a = build_table(p), b = reference::build_table_direct(p);
    for (u64 z = 0; z < 211; ++z) REQUIRE(a[z] == doctest::Approx(b[z]).epsilon(1e-12));
  }

  TEST_CASE("second moment and Weil bound") {
    // sum over all a of |S(a,1)|^2 = q^2 - q for prime q.
    const u64 q = 10007;
    const auto table = build_table(PrimeModulus(q));
    long double acc = 0;
    double worst = 0;
    for (double v : table.values()) {
      acc += static_cast<long double>(v) * v * static_cast<long double>(q);
      worst = std::max(worst, std::abs(v));
    }
    const double qd = static_cast<double>(q);
    CHECK(static_cast<double>(acc) == doctest::Approx(qd * qd - qd).epsilon(1e-10));
    CHECK(worst <= 2.0 + 1e-9);
    CHECK(table[0] == doctest::Approx(-1.0 / std::sqrt(qd)));
  }

  TEST_CASE("weil_check samples within the bound") {
    const auto report = weil_check(PrimeModulus(1009), 200, 7);
    CHECK(report.trials == 200);
    CHECK(report.within_bound);
    CHECK(report.max_ratio <= 1.0 + 1e-9);
    CHECK(report.max_ratio > 0.5);
    CHECK_THROWS_AS(weil_check(PrimeModulus(5), 0, 1), DomainError);
  }

  TEST_CASE("binary roundtrip and bad magic") {
    const auto table = build_table(PrimeModulus(101));
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "btw_unit_kl101.bin";
    table.save_binary(path);
    CHECK(std::filesystem::file_size(path) == 8 + 8 + 8 * 101);
    const auto loaded = KloostermanTable::load_binary(path);
    CHECK(loaded.modulus().value() == 101);
    for (u64 a = 0; a < 101; ++a) REQUIRE(loaded[a] == table[a]);

    {
      std::ifstream in(path, std::ios::binary);
      char magic[8];
      in.read(magic, 8);
      CHECK(std::string(magic, 8) == "BTWKLTB1");
    }
    {
      std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
      f.seekp(0);
      f.write("XXXX", 4);
    }
    CHECK_THROWS(KloostermanTable::load_binary(path));
    std::filesystem::remove(path);
  }

  TEST_CASE("csv layout") {
    std::ostringstream os;
    build_table(PrimeModulus(3)).write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "a,kl");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 3);
  }

  TEST_CASE("resource cap") {
    CHECK_THROWS_AS(build_table(PrimeModulus(1009), 1000), ResourceError);
  }
}
