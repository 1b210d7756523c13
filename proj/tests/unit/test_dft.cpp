#include <doctest.h>

#include <cmath>
#include <numbers>

#include "btw/dft.hpp"
#include "btw/rng.hpp"

using namespace btw;

namespace {

std::vector<cplx> random_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<cplx> v(n);
  for (auto& z : v) z = {rng.uniform() - 0.5, rng.uniform() - 0.5};
  return v;
}

// Textbook DFT in long double, independent of the library's reference.
std::vector<cplx> slow_dft(const std::vector<cplx>& in) {
  const std::size_t n = in.size();
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const long double a = -2.0L * std::numbers::pi_v<long double> *
                            static_cast<long double>((j * k) % n) / static_cast<long double>(n);
      re += in[j].real() * std::cos(a) - in[j].imag() * std::sin(a);
      im += in[j].real() * std::sin(a) + in[j].imag() * std::cos(a);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("dft") {
  TEST_CASE("forward matches a long double DFT for mixed sizes") {
    // Powers of two, small odd primes, Bluestein-sized primes and products.
    for (std::size_t n : {1u, 2u, 3u, 4u, 8u, 12u, 30u, 60u, 67u, 100u, 127u, 210u, 256u, 262u, 1000u, 1009u}) {
      CAPTURE(n);
      const auto in = random_vector(n, n);
      std::vector<cplx> out(n);
      DftPlan(n).forward(in, out);
      REQUIRE(max_diff(out, slow_dft(in)) < 1e-11 * std::sqrt(static_cast<double>(n)) + 1e-14);
    }
  }

  TEST_CASE("naive reference agrees with the fast plan") {
    const auto in = random_vector(97 * 3, 9);
    std::vector<cplx> out(in.size());
    DftPlan(in.size()).forward(in, out);
    CHECK(max_diff(out, reference::naive_dft(in)) < 1e-10);
  }

  TEST_CASE("inverse undoes forward") {
    for (std::size_t n : {5u, 64u, 100u, 131u, 10006u}) {
      const auto in = random_vector(n, 100 + n);
      std::vector<cplx> mid(n), back(n);
      const DftPlan plan(n);
      plan.forward(in, mid);
      plan.inverse(mid, back);
      CHECK(max_diff(in, back) < 1e-12);
    }
  }

  TEST_CASE("sizes above the full twiddle table, spot-checked bins") {
    // 2^17, a Bluestein prime past 2^16 and 2 * 3 * 166667.
    for (std::size_t n : {131072u, 65537u * 2u, 1000002u}) {
      CAPTURE(n);
      const auto in = random_vector(n, 77 + n);
      std::vector<cplx> out(n);
      DftPlan(n).forward(in, out);
      for (std::size_t k : {std::size_t{0}, std::size_t{1}, n / 3, n - 1}) {
        long double re = 0, im = 0;
        for (std::size_t j = 0; j < n; ++j) {
          const long double a = -2.0L * std::numbers::pi_v<long double> *
                                static_cast<long double>((static_cast<unsigned __int128>(j) * k) % n) /
                                static_cast<long double>(n);
          re += in[j].real() * std::cos(a) - in[j].imag() * std::sin(a);
          im += in[j].real() * std::sin(a) + in[j].imag() * std::cos(a);
        }
        REQUIRE(std::abs(out[k] - cplx(static_cast<double>(re), static_cast<double>(im))) < 1e-8);
      }
    }
  }

  TEST_CASE("factorisation covers n") {
    const DftPlan plan(2 * 2 * 3 * 131);
    std::size_t prod = 1;
    for (auto f : plan.factors()) prod *= f;
    CHECK(prod == plan.size());
  }

  TEST_CASE("delta and constant transform exactly") {
    std::vector<cplx> delta(48, 0.0), out(48);
    delta[0] = 1.0;
    DftPlan(48).forward(delta, out);
    for (const auto& z : out) CHECK(std::abs(z - cplx(1.0)) < 1e-15);
  }
}
