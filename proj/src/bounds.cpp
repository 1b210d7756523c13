#include "btw/bounds.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "btw/errors.hpp"
#include "btw/modmath.hpp"

namespace btw {

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw DomainError("not a rational number: '" + std::string(s) + "'");
  }
  return v;
}

void require_nu(int nu) {
  if (nu < 5) throw DomainError("nu >= 5 is required to guarantee H > 4q^{1/nu}");
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const std::int64_t den = parse_int(text.substr(slash + 1));
    if (den == 0) throw DomainError("zero denominator in '" + std::string(text) + "'");
    return Rational(parse_int(text.substr(0, slash)), den);
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const bool negative = !text.empty() && text.front() == '-';
    const std::string_view whole = text.substr(negative ? 1 : 0, dot - (negative ? 1 : 0));
    const std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 15) throw DomainError("too many decimals in '" + std::string(text) + "'");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    if (f < 0 || w < 0) throw DomainError("not a rational number: '" + std::string(text) + "'");
    const Rational r(w * scale + f, scale);
    return negative ? -r : r;
  }
  return Rational(parse_int(text));
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

IwaniecValue c_iwaniec(const Rational& varpi) {
  const Rational denom = Rational(6) - Rational(7) * varpi;
  if (denom <= 0) throw DomainError("c_iwaniec needs 7 varpi < 6");
  return {Rational(8) / denom, varpi >= Rational(9, 20) && varpi < Rational(2, 3)};
}

double c_iwaniec(double varpi) {
  if (!(7.0 * varpi < 6.0)) throw DomainError("c_iwaniec needs 7 varpi < 6");
  return 8.0 / (6.0 - 7.0 * varpi);
}

Rational delta_nu(int nu, const Rational& varpi) {
  const std::int64_t n = nu;
  return (Rational(2 * n) - Rational(3 * n + 4) * varpi) / Rational(n * (2 * n - 1));
}

Rational range_hi(int nu) {
  const std::int64_t n = nu;
  return Rational(n * (2 * n + 1), 4 * n * n + n + 4);
}

ExponentPlan c_new(int nu, const Rational& varpi) {
  require_nu(nu);
  const Rational hi = range_hi(nu);
  if (varpi < Rational(1, 2) || varpi >= hi) {
    throw DomainError("c_new needs varpi in [1/2, " + to_string(hi) + ") for nu = " + std::to_string(nu));
  }
  ExponentPlan plan;
  plan.varpi = varpi;
  plan.nu = nu;
  plan.delta = delta_nu(nu, varpi);
  plan.C = Rational(8) / (Rational(6) - Rational(7) * varpi + plan.delta);
  plan.range_hi = hi;
  return plan;
}

AffineDenominator c_new_denominator(int nu) {
  require_nu(nu);
  const std::int64_t n = nu;
  return {Rational(6) + Rational(2, 2 * n - 1), Rational(-7) - Rational(3 * n + 4, n * (2 * n - 1))};
}

NuOptimum optimize_nu(const Rational& varpi, int nu_max) {
  NuOptimum best;
  if (nu_max < 5) {
    best.reason = "nu_max must be at least 5";
    return best;
  }
  if (varpi < Rational(1, 2)) {
    best.reason = "varpi must be at least 1/2";
    return best;
  }
  for (int nu = 5; nu <= nu_max; ++nu) {
    if (!(varpi < range_hi(nu))) continue;
    ExponentPlan plan = c_new(nu, varpi);
    if (!best.feasible || plan.C < best.plan->C) {
      best.feasible = true;
      best.nu = nu;
      best.plan = plan;
    }
  }
  if (!best.feasible) {
    best.reason = "no nu in [5, " + std::to_string(nu_max) + "] has range_hi(nu) > " + to_string(varpi);
  }
  return best;
}

ParameterPlan plan_parameters(double x, std::uint64_t q, int nu, double eps, double eps_prime) {
  require_nu(nu);
  if (!(x > 1.0)) throw DomainError("x > 1 is required");
  if (q < 2 || !is_prime(q)) throw DomainError("q must be prime");
  if (!(eps > 0.0)) throw DomainError("eps > 0 is required");

  ParameterPlan p;
  p.x = x;
  p.q = static_cast<double>(q);
  p.nu = nu;
  p.eps = eps;
  p.eps_prime = eps_prime;
  p.degenerate = !(eps_prime > 0.0);
  p.varpi = std::log(p.q) / std::log(x);
  p.varpi_in_range = p.varpi >= 0.5 && p.varpi < to_double(range_hi(nu));

  const double n = nu;
  const double lx = std::log(x), lq = std::log(p.q);
  p.M = std::exp((1.0 - eps_prime) * lx - lq);
  p.N_simplified = std::exp((n / (2 * n - 1) - eps_prime) * lx -
                            (3 * n * n + 2) / (2 * n * (2 * n - 1)) * lq);
  p.N_first = std::exp(((2 * n - 1) / (2 * (2 * n - 3)) - eps_prime) * lx -
                       (3 * n * n - n + 2) / (2 * n * (2 * n - 3)) * lq);
  p.N = std::min(p.N_first, p.N_simplified);
  p.N_branch = p.N_first < p.N_simplified ? "first" : "simplified";
  p.D = p.M * p.N;
  p.D_closed = std::exp(((3 * n - 1) / (2 * n - 1) - 2 * eps_prime) * lx -
                        (7 * n * n - 2 * n + 2) / (2 * n * (2 * n - 1)) * lq);
  p.D_relative_gap = std::abs(p.M * p.N_simplified - p.D_closed) / p.D_closed;
  p.H = std::pow(x, eps - 1.0) * p.D * p.q;
  p.K = std::pow(p.q, 1.0 + eps) / p.M;
  p.R = std::pow(p.q, 1.0 / n);
  p.S = p.H / (4.0 * p.R);

  if (!(p.H > 4.0 * p.R)) p.violations.emplace_back("H > 4q^{1/nu}");
  if (!(p.M > 2.0 * std::pow(p.q, eps))) p.violations.emplace_back("M > 2q^eps");
  if (!(p.K < p.q / 2.0)) p.violations.emplace_back("K < q/2");
  return p;
}

ParameterPlan parameter_plan(double x, std::uint64_t q, int nu, double eps, double eps_prime) {
  ParameterPlan p = plan_parameters(x, q, nu, eps, eps_prime);
  if (!p.ok()) {
    std::string names;
    for (const std::string& v : p.violations) names += (names.empty() ? "" : ", ") + v;
    throw DomainError("parameter plan violates " + names);
  }
  return p;
}

}  // namespace btw
