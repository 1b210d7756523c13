#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "../oracles.hpp"
#include "btw/errors.hpp"
#include "btw/expsums.hpp"

using namespace btw;

namespace {

template <class F>
cplx simpson(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  cplx acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return acc * (h / 3.0);
}

}  // namespace

TEST_SUITE("expsums") {
  TEST_CASE("quint_sum_sharp equals direct Kloosterman sums") {
    for (u64 q : {5ULL, 101ULL, 211ULL}) {
      const PrimeModulus p(q);
      const auto table = build_table(p);
      for (u64 H : {1ULL, 2ULL}) {
        for (u64 N : {1ULL, 2ULL}) {
          for (u64 K : {1ULL, 2ULL}) {
            if (2 * N >= q || 2 * H >= q || 2 * K >= q) continue;
            const auto cfg = QuintConfig::with_random_coefficients(p, 2, H, K, 3, N, 11 + H + N + K);
            const cplx fast = quint_sum_sharp(cfg, table);
            const cplx slow = oracle::quint_sum(cfg);
            REQUIRE(std::abs(fast - slow) <= 1e-6 * std::max(1.0, std::abs(slow)));
          }
        }
      }
    }
    // The largest configuration from the invariant, once.
    const PrimeModulus p(211);
    const auto cfg = QuintConfig::with_random_coefficients(p, 5, 4, 4, 3, 4, 3);
    const cplx slow = oracle::quint_sum(cfg);
    CHECK(std::abs(quint_sum_sharp(cfg, build_table(p)) - slow) <= 1e-6 * std::abs(slow));
  }

  TEST_CASE("quint validation") {
    const PrimeModulus p(11);
    CHECK_THROWS_AS(QuintConfig::with_unit_coefficients(p, 0, 1, 1, 1, 1).validate(), DomainError);
    CHECK_THROWS_AS(QuintConfig::with_unit_coefficients(p, 1, 1, 6, 1, 1).validate(), DomainError);
    CHECK_THROWS_AS(QuintConfig::with_unit_coefficients(p, 1, 1, 1, 1, 6).validate(), DomainError);
    auto cfg = QuintConfig::with_unit_coefficients(p, 1, 1, 1, 1, 1);
    cfg.beta.push_back(1.0);
    CHECK_THROWS_AS(cfg.validate(), DomainError);
  }

  TEST_CASE("coefficient generation is seeded and unimodular") {
    const PrimeModulus p(101);
    const auto a = QuintConfig::with_random_coefficients(p, 1, 2, 2, 5, 3, 9);
    const auto b = QuintConfig::with_random_coefficients(p, 1, 2, 2, 5, 3, 9);
    const auto c = QuintConfig::with_random_coefficients(p, 1, 2, 2, 5, 3, 10);
    CHECK(a.beta == b.beta);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta != c.beta);
    CHECK(a.beta.size() == 3);
    CHECK(a.alpha.size() == 5);
    for (const auto& z : a.beta) CHECK(std::abs(std::abs(z) - 1.0) < 1e-14);
  }

  TEST_CASE("beta identically zero gives zero") {
    const PrimeModulus p(101);
    auto cfg = QuintConfig::with_unit_coefficients(p, 1, 2, 2, 10, 2);
    std::fill(cfg.beta.begin(), cfg.beta.end(), cplx(0.0));
    CHECK(quint_sum_sharp(cfg, build_table(p)) == cplx(0.0));
    const auto w = SmoothWeight::for_scale(1e4);
    const auto s = sigma_fixed_k(cfg, w, PlateauBump::unit_majorant(), build_table(p), 5);
    CHECK(s.sigma == 0.0);
    CHECK(mean_square_direct(cfg, w, PlateauBump::unit_majorant()) == 0.0);
  }

  TEST_CASE("Phi-tilde matches direct quadrature and conjugation symmetry") {
    const PrimeModulus p(101);
    const auto w = SmoothWeight::for_scale(1e4);
    const auto W = PlateauBump::unit_majorant();
    const double M = 20;
    const PhiTilde pt(w, W, M, p, 5, 3.0);
    for (auto [k, h1, h2, n1, n2] : {std::tuple<i64, i64, i64, u64, u64>{0, 1, 1, 2, 2},
                                      {3, 2, 1, 3, 2},
                                      {-5, 1, 3, 3, 1},
                                      {1, 0, 2, 1, 2}}) {
      const cplx direct = simpson(
          [&](double t) {
            const double q = 101.0;
            return W(t / M) * w.fourier(h1 / (t * n1 * q)) * std::conj(w.fourier(h2 / (t * n2 * q))) *
                   std::polar(1.0, -2 * std::numbers::pi * k * t / q);
          },
          0.9 * M, 2.1 * M, 4000);
      CHECK(std::abs(pt(k, h1, h2, n1, n2) - direct) < 1e-8 * pt.scale());
      CHECK(std::abs(pt(-k, h2, h1, n2, n1) - std::conj(pt(k, h1, h2, n1, n2))) < 1e-10 * pt.scale());
    }
    // k = 0 with equal arguments is a positive real integral.
    const cplx v = pt(0, 1, 1, 2, 2);
    CHECK(v.real() > 0);
    CHECK(std::abs(v.imag()) < 1e-10 * pt.scale());
  }

  TEST_CASE("Poisson in m: Sigma plus the k = 0 term is the mean square") {
    const PrimeModulus p(101);
    const auto table = build_table(p);
    const auto w = SmoothWeight::for_scale(1e4);
    const auto W = PlateauBump::unit_majorant();
    const auto cfg = QuintConfig::with_random_coefficients(p, 3, 1, 1, 40, 1, 5);
    const auto s = sigma_fixed_k(cfg, w, W, table, 1000);
    const double ms = mean_square_direct(cfg, w, W);
    CHECK(std::abs(s.sigma + s.k0_term.real() - ms) < 1e-9 * ms);
    CHECK(std::abs(s.sigma_imag) < 1e-9 * ms);
    CHECK(std::abs(s.k0_term) <= s.k0_bound * (1 + 1e-9));
  }

  TEST_CASE("sigma_weighted derives K and guards its range") {
    const PrimeModulus p(101);
    const auto table = build_table(p);
    const auto w = SmoothWeight::for_scale(1e4);
    const auto W = PlateauBump::unit_majorant();
    const auto cfg = QuintConfig::with_random_coefficients(p, 1, 2, 1, 20, 2, 1);
    const auto s = sigma_weighted(cfg, w, W, table, 0.1);
    CHECK(s.K == static_cast<u64>(std::floor(std::pow(101.0, 1.1) / 20.0)));
    CHECK(s.error_formula > 0);
    const auto small = QuintConfig::with_random_coefficients(p, 1, 2, 1, 2, 2, 1);
    CHECK_THROWS_AS(sigma_weighted(small, w, W, table, 0.1), DomainError);
  }

  TEST_CASE("Cauchy-Schwarz chain |R|^2 <= (sum |alpha/m|^2) M mean_square") {
    const PrimeModulus p(101);
    const auto w = SmoothWeight::for_scale(1e4);
    const auto W = PlateauBump::unit_majorant();
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const auto cfg = QuintConfig::with_random_coefficients(p, 2, 3, 1, 15, 2, seed);
      double alpha_mass = 0;
      for (u64 m = cfg.M + 1; m <= 2 * cfg.M; ++m) alpha_mass += std::norm(cfg.alpha_at(m)) / double(m * m);
      const double lhs = std::norm(r_bilinear(cfg, w));
      const double rhs = alpha_mass * cfg.M * mean_square_direct(cfg, w, W);
      CHECK(lhs <= rhs * (1 + 1e-12));
    }
  }

  TEST_CASE("shift identity holds to rounding") {
    const PrimeModulus p(101);
    const auto cfg = QuintConfig::with_random_coefficients(p, 1, 8, 2, 4, 3, 7);
    const auto sh = ShiftConfig::sampled(8, 1, 6, 8);
    CHECK(sh.S == 2);
    for (const auto& s : sh.shifts) {
      CHECK(s.r != 0);
      CHECK(std::abs(s.r) <= 2);
      CHECK(std::abs(s.s1) <= 4);
    }
    const auto rep = shift_identity_check(cfg, sh, SmoothWeight::for_scale(1e4), PlateauBump::unit_majorant(),
                                          build_table(p));
    CHECK(rep.discrepancies.size() == 6);
    CHECK(rep.max_relative <= 1e-9);
    CHECK_THROWS_AS(ShiftConfig::sampled(8, 3, 1, 1), DomainError);
  }

  TEST_CASE("rho census agrees with an independent enumeration") {
    const u64 q = 31;
    RhoConfig cfg{PrimeModulus(q), 3, 2, 2, 1, 2};
    const auto census = rho_census(cfg);
    const auto Q = static_cast<std::int64_t>(q);
    std::map<std::pair<std::int64_t, std::int64_t>, std::uint64_t> counts;
    std::uint64_t raw = 0;
    const auto Hm = static_cast<std::int64_t>(2 * cfg.H);
    for (std::int64_t k = -2; k <= 2; ++k) {
      if (k == 0) continue;
      for (std::int64_t n1 = 3; n1 <= 4; ++n1)
        for (std::int64_t n2 = 3; n2 <= 4; ++n2)
          for (std::int64_t s1 = 2; s1 <= 2; ++s1)
            for (std::int64_t s2 = 2; s2 <= 2; ++s2)
              for (std::int64_t h1 = -Hm; h1 <= Hm; ++h1)
                for (std::int64_t h2 = -Hm; h2 <= Hm; ++h2) {
                  const std::int64_t i1 = oracle::inverse(n1, Q), i2 = oracle::inverse(n2, Q);
                  const std::int64_t c = oracle::mod(3 * k * (s1 * i1 - s2 * i2), Q);
                  const std::int64_t b = oracle::mod(3 * k * (h1 * i1 - h2 * i2), Q);
                  if (c == 0 || h1 * n2 == h2 * n1) continue;
                  ++counts[{b, c}];
                  ++raw;
                }
    }
    CHECK(census.sigma1 == raw);
    CHECK(census.admitted == raw);
    CHECK(census.enumerated == static_cast<u64>(cfg.tuple_count()));
    std::uint64_t s2 = 0;
    for (const auto& [bc, v] : counts) {
      REQUIRE(census.rho(static_cast<u64>(bc.first), static_cast<u64>(bc.second)) == v);
      s2 += v * v;
    }
    CHECK(census.sigma2 == s2);
    CHECK(census.report.rho_support == counts.size());
    // Cauchy-Schwarz on rho.
    CHECK(census.report.sigma2 >= census.report.sigma1 * census.report.sigma1 / census.report.rho_support);
  }

  TEST_CASE("rho census with an empty range and over budget") {
    RhoConfig empty{PrimeModulus(31), 1, 0, 2, 1, 2};
    const auto c = rho_census(empty);
    CHECK(c.sigma2 == 0);
    CHECK(c.report.ratio2 == 0.0);
    RhoConfig big{PrimeModulus(101), 1, 3, 2, 3, 2, 1000};
    CHECK_THROWS_AS(rho_census(big), ResourceError);
  }

  TEST_CASE("Holder step holds on a toy census") {
    RhoConfig cfg{PrimeModulus(101), 1, 3, 2, 3, 2};
    const auto census = rho_census(cfg);
    const auto table = build_table(cfg.q);
    const auto theta = random_theta(2, 4);
    for (unsigned nu : {1u, 2u}) {
      const auto h = holder_check(census, table, 2, theta, nu);
      CHECK(h.holds);
      CHECK(h.lhs <= h.rhs * (1 + 1e-12));
    }
  }

  TEST_CASE("sum_product_A identities and invariances") {
    const auto t5 = build_table(PrimeModulus(5));
    const std::array<i64, 2> d5{2, 2};
    CHECK(sum_product_A(d5, t5) == doctest::Approx(16.0).epsilon(1e-12));

    const auto table = build_table(PrimeModulus(101));
    for (i64 m : {0, 1, 7, 50}) {
      const std::array<i64, 2> d{m, m};
      CHECK(sum_product_A(d, table) == doctest::Approx(100.0 * 100.0).epsilon(1e-12));
    }
    const std::array<i64, 2> generic{0, 51};
    CHECK(std::abs(sum_product_A(generic, table)) <= 10.0 * 101);

    const std::array<i64, 4> m{1, 3, 4, 9}, perm{9, 4, 1, 3}, shifted{6, 8, 9, 14};
    const double base = sum_product_A(m, table);
    CHECK(sum_product_A(perm, table) == doctest::Approx(base).epsilon(1e-10));
    CHECK(sum_product_A(shifted, table) == doctest::Approx(base).epsilon(1e-6));
  }

  TEST_CASE("power moment: parallel equals serial") {
    const auto table = build_table(PrimeModulus(211));
    const auto coeffs = random_theta(4, 2);
    const double serial = reference::power_moment_serial(table, coeffs, 1, 2);
    const double p1 = power_moment(table, coeffs, 1, 2, 1);
    const double p4 = power_moment(table, coeffs, 1, 2, 4);
    CHECK(p1 == p4);
    CHECK(p1 == doctest::Approx(serial).epsilon(1e-12));
    // translating the m-range does not change the moment
    CHECK(power_moment(table, coeffs, 17, 2, 2) == doctest::Approx(p1).epsilon(1e-10));
  }

  TEST_CASE("sigma3 moment identities") {
    for (u64 q : {5ULL, 101ULL}) {
      const auto table = build_table(PrimeModulus(q));
      const std::vector<cplx> one{1.0};
      const auto v = sigma3_moment(table, 1, 1, one);
      const double qm = static_cast<double>(q - 1);
      CHECK(v.value == doctest::Approx(qm * qm).epsilon(1e-6));
      CHECK(v.ratio == doctest::Approx(qm * qm / (double(q) * q + q)).epsilon(1e-6));
    }
    const auto table = build_table(PrimeModulus(101));
    const std::vector<cplx> zeros(5, 0.0), ones(5, 1.0);
    CHECK(sigma3_moment(table, 5, 1, zeros).value == 0.0);
    CHECK(sigma3_moment(table, 5, 2, ones).ratio <= 4.0);
    CHECK_THROWS_AS(sigma3_moment(table, 5, 2, ones, 1000), ResourceError);
    CHECK_THROWS_AS(sigma3_moment(table, 5, 2, std::vector<cplx>(4, 1.0)), DomainError);
  }

  TEST_CASE("strata census at nu = 1") {
    for (u64 q : {101ULL, 211ULL}) {
      const auto table = build_table(PrimeModulus(q));
      const auto s = strata_census(table, 5, 1);
      CHECK(s.total == 25);
      CHECK(s.v_like + s.w_like + s.generic == s.total);
      CHECK(s.v_like == 5);
      CHECK(s.v_ratio <= 2.0);
      for (const auto& t : s.v_tuples) CHECK(t[0] == t[1]);
    }
    const auto table = build_table(PrimeModulus(101));
    CHECK_THROWS_AS(strata_census(table, 10, 3, {}, 1000), ResourceError);
  }
}
