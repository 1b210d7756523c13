#include "btw/smoothweight.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "btw/errors.hpp"
#include "btw/modmath.hpp"

namespace btw {

namespace {

double bump_kernel(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / (s * (1.0 - s)));
}

using Gauss30 = boost::math::quadrature::gauss<double, 30>;
using Gauss20 = boost::math::quadrature::gauss<double, 20>;

// sin(pi t) with the argument reduced mod 2 first.
double sin_pi(double t) {
  const double r = std::fmod(t, 2.0);
  return std::sin(std::numbers::pi * r);
}

double sinc_pi(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - (std::numbers::pi * t) * (std::numbers::pi * t) / 6.0;
  return sin_pi(t) / (std::numbers::pi * t);
}

}  // namespace

const EdgeProfile& EdgeProfile::instance() {
  static const EdgeProfile profile;
  return profile;
}

EdgeProfile::EdgeProfile() {
  cumulative_[0] = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double lo = static_cast<double>(i) / kPanels;
    const double hi = static_cast<double>(i + 1) / kPanels;
    cumulative_[i + 1] = cumulative_[i] + Gauss30::integrate(bump_kernel, lo, hi);
  }
  total_ = cumulative_[kPanels];
}

double EdgeProfile::operator()(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (u > 0.5) return 1.0 - (*this)(1.0 - u);
  const int panel = std::min(kPanels - 1, static_cast<int>(u * kPanels));
  const double lo = static_cast<double>(panel) / kPanels;
  const double partial = u > lo ? Gauss30::integrate(bump_kernel, lo, u) : 0.0;
  return (cumulative_[panel] + partial) / total_;
}

double EdgeProfile::density(double u) const { return bump_kernel(u) / total_; }

cplx EdgeProfile::density_fourier(double eta, double tol) const {
  if (eta == 0.0) return {1.0, 0.0};
  // Fixed rules on panels of at most a quarter period; the density is
  // smooth at that scale, so 20 and 30 points agree unless something is off.
  const auto panels = static_cast<int>(std::max(16.0, std::ceil(4.0 * std::abs(eta))));
  const double inv_total = 1.0 / total_;
  auto integrand = [&](double u) -> cplx {
    const double angle = -2.0 * std::numbers::pi * eta * u;
    return bump_kernel(u) * inv_total * cplx(std::cos(angle), std::sin(angle));
  };
  cplx acc20{}, acc30{};
  for (int i = 0; i < panels; ++i) {
    const double lo = static_cast<double>(i) / panels;
    const double hi = static_cast<double>(i + 1) / panels;
    acc20 += Gauss20::integrate(integrand, lo, hi);
    acc30 += Gauss30::integrate(integrand, lo, hi);
  }
  const double gap = std::abs(acc20 - acc30);
  if (!(gap <= std::max(tol, 1e-14))) {
    throw NumericalError("edge-density Fourier quadrature did not converge at eta = " +
                         std::to_string(eta) + " (20/30-point gap " + std::to_string(gap) + ")");
  }
  return acc30;
}

PlateauBump::PlateauBump(double support_lo, double plateau_lo, double plateau_hi, double support_hi)
    : support_lo_(support_lo), plateau_lo_(plateau_lo), plateau_hi_(plateau_hi), support_hi_(support_hi) {
  if (!(support_lo < plateau_lo && plateau_lo <= plateau_hi && plateau_hi < support_hi)) {
    throw DomainError("plateau bump needs support_lo < plateau_lo <= plateau_hi < support_hi");
  }
}

double PlateauBump::operator()(double t) const {
  if (t <= support_lo_ || t >= support_hi_) return 0.0;
  const EdgeProfile& p = EdgeProfile::instance();
  if (t < plateau_lo_) return p((t - support_lo_) / (plateau_lo_ - support_lo_));
  if (t <= plateau_hi_) return 1.0;
  return p((support_hi_ - t) / (support_hi_ - plateau_hi_));
}

double PlateauBump::integral() const {
  return (plateau_hi_ - plateau_lo_) + 0.5 * (plateau_lo_ - support_lo_) + 0.5 * (support_hi_ - plateau_hi_);
}

SmoothWeight::SmoothWeight(double x, double y, double quadrature_tolerance)
    : x_(x), y_(y), tol_(quadrature_tolerance), bump_([&] {
        if (!(y > 0.0 && x > 4.0 * y)) {
          throw DomainError("smooth weight needs x > 4y > 0 (x = " + std::to_string(x) +
                            ", y = " + std::to_string(y) + ")");
        }
        return PlateauBump(y, 2.0 * y, x, x + y);
      }()) {
  if (!(tol_ > 0.0)) throw DomainError("quadrature tolerance must be positive");
}

SmoothWeight SmoothWeight::for_scale(double x, double quadrature_tolerance) {
  if (!(x > 1.0)) throw DomainError("smooth weight scale must exceed 1");
  const double log_x = std::log(x);
  return SmoothWeight(x, x / (log_x * log_x * log_x), quadrature_tolerance);
}

cplx SmoothWeight::fourier(double xi) const {
  const double width = x_ - y_;
  if (xi == 0.0) return {width, 0.0};
  const double centre = 0.5 * (x_ + y_);
  const cplx bump = EdgeProfile::instance().density_fourier(y_ * xi, tol_);
  return e(-xi * centre) * (width * sinc_pi(xi * width)) * bump;
}

double phi(double t, const SmoothWeight& w) { return w(t); }

cplx phi_hat(double xi, const SmoothWeight& w) { return w.fourier(xi); }

TentWeight::TentWeight(double H) : H_(H) {
  if (!(H >= 1.0)) throw DomainError("tent weight needs H >= 1");
}

double TentWeight::operator()(double lambda) const {
  if (lambda <= 0.0 || lambda >= H_ + 1.0) return 0.0;
  return std::min({lambda, 1.0, H_ + 1.0 - lambda});
}

cplx TentWeight::fourier(double eta) const {
  if (eta == 0.0) return {H_, 0.0};
  return e(-0.5 * eta * (H_ + 1.0)) * (H_ * sinc_pi(eta * H_) * sinc_pi(eta));
}

double TentWeight::decay_bound(double eta) const {
  const double a = std::abs(eta);
  if (a == 0.0) return H_;
  return std::min({H_, kDecayC1 / a, kDecayC2 / (a * a)});
}

cplx tent_hat(double eta, const TentWeight& v) { return v.fourier(eta); }

}  // namespace btw
