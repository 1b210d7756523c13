#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace btw {

using Rational = boost::rational<std::int64_t>;

/// Accepts "p/q", integers and finite decimals ("0.507"); exact. Throws DomainError.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);  // "480/151", or "3" for integers
double to_double(const Rational& r);

struct IwaniecValue {
  Rational value;
  bool in_validity_range = false;  // varpi in [9/20, 2/3)
};

/// 8/(6 - 7 varpi). Outside [9/20, 2/3) the value is still returned, flagged.
/// Throws DomainError when 7 varpi >= 6.
IwaniecValue c_iwaniec(const Rational& varpi);
double c_iwaniec(double varpi);

/// delta_nu(varpi) = (2nu - (3nu+4) varpi)/(nu(2nu-1)).
Rational delta_nu(int nu, const Rational& varpi);
/// nu(2nu+1)/(4nu^2+nu+4).
Rational range_hi(int nu);

struct ExponentPlan {
  Rational varpi;
  int nu = 0;
  Rational delta;
  Rational C;  // 8/(6 - 7 varpi + delta)
  Rational range_hi;

  double C_value() const { return to_double(C); }
  double delta_value() const { return to_double(delta); }
};

/// Throws DomainError for nu < 5 or varpi outside [1/2, range_hi(nu)).
ExponentPlan c_new(int nu, const Rational& varpi);

/// C_new(nu, varpi) = 8/(constant + slope * varpi) as an identity in varpi.
struct AffineDenominator {
  Rational constant;
  Rational slope;
};
AffineDenominator c_new_denominator(int nu);

struct NuOptimum {
  bool feasible = false;
  int nu = 0;
  std::optional<ExponentPlan> plan;
  std::string reason;  // set when infeasible
};

/// The nu in [5, nu_max] minimising C(varpi) among those with varpi < range_hi(nu);
/// ties go to the smallest nu. Infeasibility is reported, not thrown.
NuOptimum optimize_nu(const Rational& varpi, int nu_max = 200);

struct ParameterPlan {
  double x = 0, q = 0;
  int nu = 0;
  double eps = 0, eps_prime = 0;
  double varpi = 0;  // log q / log x
  bool varpi_in_range = false;

  double M = 0;
  double N = 0;             // the min-form
  double N_simplified = 0;  // x^{nu/(2nu-1) - eps'} q^{-(3nu^2+2)/(2nu(2nu-1))}
  double N_first = 0;       // x^{(2nu-1)/(2(2nu-3)) - eps'} q^{-(3nu^2-nu+2)/(2nu(2nu-3))}
  std::string N_branch;     // "first" or "simplified", whichever is smaller
  double D = 0;             // M N
  double D_closed = 0;      // x^{(3nu-1)/(2nu-1) - 2eps'} q^{-(7nu^2-2nu+2)/(2nu(2nu-1))}
  double D_relative_gap = 0;  // |M N_simplified - D_closed| / D_closed
  double H = 0, K = 0, R = 0, S = 0;

  bool degenerate = false;  // eps' <= 0
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Evaluates the plan and records every hard-constraint violation by name
/// ("H > 4q^{1/nu}", "M > 2q^eps", "K < q/2"). Throws DomainError for nu < 5,
/// non-prime q or eps <= 0.
ParameterPlan plan_parameters(double x, std::uint64_t q, int nu, double eps, double eps_prime);

/// As plan_parameters, but any violation is a DomainError naming it.
ParameterPlan parameter_plan(double x, std::uint64_t q, int nu, double eps, double eps_prime);

}  // namespace btw
