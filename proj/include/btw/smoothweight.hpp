#pragma once

#include <array>
#include <complex>

namespace btw {

using cplx = std::complex<double>;

/// The normalised C^infinity step p(u) = B(u)/B(1), B(u) = int_0^u exp(-1/(s(1-s))) ds.
/// p(0)=0, p(1)=1 and p(u) + p(1-u) = 1.
class EdgeProfile {
 public:
  static const EdgeProfile& instance();

  double operator()(double u) const;
  /// p'(u) = exp(-1/(u(1-u)))/B(1), a probability density on [0,1].
  double density(double u) const;
  /// Fourier transform of the density, G(eta) = int_0^1 p'(u) e(-eta u) du.
  /// 20- and 30-point Gauss-Legendre on panels of width min(1/16, 1/(4|eta|));
  /// throws NumericalError if the two differ by more than tol.
  cplx density_fourier(double eta, double tol) const;
  double normaliser() const { return total_; }

 private:
  EdgeProfile();
  static constexpr int kPanels = 128;
  double total_ = 0.0;
  std::array<double, kPanels + 1> cumulative_{};  // unnormalised B at panel edges
};

/// A C^infinity plateau function: 0 outside [support_lo, support_hi], 1 on
/// [plateau_lo, plateau_hi], edges built from EdgeProfile.
class PlateauBump {
 public:
  PlateauBump(double support_lo, double plateau_lo, double plateau_hi, double support_hi);

  double operator()(double t) const;
  double support_lo() const { return support_lo_; }
  double plateau_lo() const { return plateau_lo_; }
  double plateau_hi() const { return plateau_hi_; }
  double support_hi() const { return support_hi_; }
  /// Exact integral when both edges have equal width (symmetric profile).
  double integral() const;

  /// The majorant of 1_[1,2] used for the m-variable: plateau [1,2], support [0.9,2.1].
  static PlateauBump unit_majorant() { return PlateauBump(0.9, 1.0, 2.0, 2.1); }

 private:
  double support_lo_, plateau_lo_, plateau_hi_, support_hi_;
};

/// The sieve weight: plateau [2y, x], support [y, x+y], 0 <= Phi <= 1.
class SmoothWeight {
 public:
  static constexpr double kDefaultTolerance = 1e-9;

  /// Throws DomainError unless x > 4y > 0.
  SmoothWeight(double x, double y, double quadrature_tolerance = kDefaultTolerance);
  /// y = x (log x)^{-3}.
  static SmoothWeight for_scale(double x, double quadrature_tolerance = kDefaultTolerance);

  double x() const { return x_; }
  double y() const { return y_; }
  double tolerance() const { return tol_; }
  const PlateauBump& bump() const { return bump_; }

  double operator()(double t) const { return bump_(t); }
  /// int Phi = x - y exactly (symmetric edges).
  double mass() const { return x_ - y_; }

  /// Phi-hat(xi) = int Phi(t) e(-xi t) dt.
  ///
  /// Phi is the convolution of 1_[y,x] with the edge density rescaled to
  /// [0,y], so Phi-hat(xi) = e(-xi(x+y)/2) (x-y) sinc(pi xi (x-y)) G(y xi);
  /// only G needs quadrature. Absolute error <= tolerance * x.
  cplx fourier(double xi) const;

 private:
  double x_, y_, tol_;
  PlateauBump bump_;
};

double phi(double t, const SmoothWeight& w);
cplx phi_hat(double xi, const SmoothWeight& w);

/// The auxiliary piecewise-linear weight min{lambda, 1, H+1-lambda}: it
/// rises on [0,1], equals 1 on [1,H] and falls back to 0 on [H,H+1], so
/// phi(h) = 1 exactly for the integers 1 <= h <= H and phi(h) = 0 for all
/// other integers.
class TentWeight {
 public:
  /// |tent_hat(eta)| <= min{integral, c1/|eta|, c2/eta^2}.
  static constexpr double kDecayC1 = 0.31830988618379067;  // 1/pi
  static constexpr double kDecayC2 = 0.10132118364233778;  // 1/pi^2

  explicit TentWeight(double H);

  double H() const { return H_; }
  double operator()(double lambda) const;
  /// Closed form: phi = 1_[0,H] * 1_[0,1], hence
  /// phi-hat(eta) = e(-eta(H+1)/2) H sinc(pi eta H) sinc(pi eta).
  cplx fourier(double eta) const;
  double integral() const { return H_; }
  double decay_bound(double eta) const;

 private:
  double H_;
};

cplx tent_hat(double eta, const TentWeight& v);

}  // namespace btw
