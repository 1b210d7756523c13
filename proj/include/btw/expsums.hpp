#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "btw/kloosterman.hpp"
#include "btw/modmath.hpp"
#include "btw/smoothweight.hpp"

namespace btw {

inline constexpr std::uint64_t kDefaultBudget = 10'000'000'000ULL;

/// Ranges and coefficients of the quintilinear sum. n runs over (N, 2N],
/// m over (M, 2M], h over [1, H], k over [1, K].
struct QuintConfig {
  PrimeModulus q;
  u64 a = 1;
  u64 H = 1, K = 1, M = 1, N = 1;
  std::vector<cplx> beta;   // beta[i] is beta_n for n = N + 1 + i
  std::vector<cplx> alpha;  // alpha[i] is alpha_m for m = M + 1 + i
  std::uint64_t seed = 0;

  /// beta_n then alpha_m drawn as e(u) from CounterRng(seed), in that order.
  static QuintConfig with_random_coefficients(const PrimeModulus& q, u64 a, u64 H, u64 K, u64 M,
                                              u64 N, std::uint64_t seed);
  /// All coefficients equal to 1.
  static QuintConfig with_unit_coefficients(const PrimeModulus& q, u64 a, u64 H, u64 K, u64 M,
                                            u64 N);

  /// Checks coefficient lengths and moduli, (a,q) = 1, 2N < q, 2H < q, K < q/2.
  void validate() const;
  cplx beta_at(u64 n) const { return beta[n - N - 1]; }
  cplx alpha_at(u64 m) const { return alpha[m - M - 1]; }
};

/// sum_{k<=K} sum_{n1,n2} beta_{n1} conj(beta_{n2}) sum_{h1,h2<=H} S(a(h1 n1bar - h2 n2bar), k; q),
/// with S(u,k;q) = sqrt(q) Kl(uk, q) for q not dividing k. Complex in general.
cplx quint_sum_sharp(const QuintConfig& cfg, const KloostermanTable& table);

/// Phi-tilde(k; h1,h2,n1,n2,q) = int W(t/M) Phi-hat(h1/(t n1 q)) conj(Phi-hat(h2/(t n2 q))) e(-kt/q) dt.
///
/// All values share one set of quadrature nodes on [0.9M, 2.1M], sized for
/// the largest |k| and |h|/n the caller says it will ask for, so Phi-hat is
/// evaluated once per (h/n, node). Each value is computed with 20- and
/// 30-point Gauss-Legendre panels and the two must agree to tol * scale().
class PhiTilde {
 public:
  PhiTilde(const SmoothWeight& w, const PlateauBump& W, double M, const PrimeModulus& q,
           std::uint64_t max_abs_k, double max_abs_ratio, double tol = 1e-10);

  cplx operator()(i64 k, i64 h1, i64 h2, u64 n1, u64 n2) const;
  /// Bound x^2 M int W for |Phi-tilde|.
  double scale() const { return scale_; }
  std::size_t panels() const { return panels_; }

 private:
  struct Nodes {
    std::vector<double> t, weight;  // weight includes W(t/M)
  };
  using Column = std::pair<std::vector<cplx>, std::vector<cplx>>;  // Phi-hat on the 20/30 nodes

  using Ratio = std::pair<i64, u64>;  // h/n in lowest terms

  static Ratio reduced(i64 h, u64 n);
  std::shared_ptr<const Column> column(const Ratio& r) const;
  cplx integrate(const Nodes& nodes, const std::vector<cplx>& f1, const std::vector<cplx>& f2,
                 i64 k) const;

  SmoothWeight w_;
  PrimeModulus q_;
  double M_;
  std::uint64_t max_k_;
  double max_ratio_;
  double tol_;
  double scale_;
  std::size_t panels_;
  Nodes g20_, g30_;
  mutable std::mutex mutex_;
  mutable std::map<Ratio, std::shared_ptr<const Column>> columns_;
  mutable std::map<std::tuple<i64, Ratio, Ratio>, cplx> values_;
};

struct SigmaResult {
  double sigma = 0.0;
  double sigma_imag = 0.0;
  u64 K = 0;
  cplx k0_term{};                // the discarded k = 0 contribution
  double k0_bound = 0.0;         // x^2/(q N^2) sum gcd(h1 n2 - h2 n1, q)
  double error_formula = 0.0;    // x^{2+eps} H N^{-1} (q^{-1} H N + 1)
};

/// Sigma with K = floor(q^{1+eps}/M). Requires M > 2 q^eps, K < q/2 and
/// 2.1 M < q (no multiple of q in the support of W(t/M)).
SigmaResult sigma_weighted(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W,
                           const KloostermanTable& table, double eps);

/// The same sum for an explicit K >= 1, without the eps-derived constraints;
/// K may exceed q/2 here.
SigmaResult sigma_fixed_k(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W,
                          const KloostermanTable& table, u64 K);

/// R(M,N) = sum_m sum_n alpha_m beta_n/(mn) sum_{h<=H} Phi-hat(h/(mnq)) e(ah (mn)bar/q).
cplx r_bilinear(const QuintConfig& cfg, const SmoothWeight& w);

/// (1/M) sum_m W(m/M) |sum_{h<=H} sum_n (beta_n/n) Phi-hat(h/(mnq)) e(ah (mn)bar/q)|^2,
/// the right side of the Cauchy-Schwarz step before Poisson summation.
double mean_square_direct(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W);

struct Shift {
  i64 r = 0, s1 = 0, s2 = 0;
};

struct ShiftConfig {
  u64 R = 1, S = 1;
  std::vector<Shift> shifts;
  std::vector<cplx> theta;  // theta[i] for r = R + 1 + i; unimodular

  /// Nonzero r in [-2R, 2R] and s1, s2 in [-2S, 2S] from CounterRng(seed);
  /// theta all ones. Requires 4RS = H.
  static ShiftConfig sampled(u64 H, u64 R, std::size_t count, std::uint64_t seed);
  void validate(u64 H) const;
};

/// Seeded unimodular theta_r for r in (R, 2R].
std::vector<cplx> random_theta(u64 R, std::uint64_t seed);

struct ShiftCheckReport {
  double sigma_phi = 0.0;    // tent-weighted Sigma, h over all of Z
  double sigma_sharp = 0.0;  // h over [1, H]
  double max_discrepancy = 0.0;
  double max_relative = 0.0;
  std::vector<double> discrepancies;
};

/// Evaluates the tent-weighted Sigma directly and in the shifted form
/// (h1,h2) -> (h1 + r s1, h2 + r s2), with the Kloosterman argument split as
/// b + r c. Uses cfg.K for the k-range.
ShiftCheckReport shift_identity_check(const QuintConfig& cfg, const ShiftConfig& shift,
                                      const SmoothWeight& w, const PlateauBump& W,
                                      const KloostermanTable& table);

struct RhoConfig {
  PrimeModulus q;
  u64 a = 1;
  u64 H = 1, N = 1, S = 1, K = 1;
  std::uint64_t budget = kDefaultBudget;

  /// (4H+1)^2 N^2 S^2 (2K), the number of enumerated tuples. Zero ranges are
  /// allowed and give an empty census.
  double tuple_count() const;
  void validate() const;
};

struct MomentReport {
  double sigma1 = 0.0, sigma2 = 0.0, sigma3 = 0.0;
  double bound1 = 0.0, bound2 = 0.0, bound3 = 0.0;
  double ratio1 = 0.0, ratio2 = 0.0, ratio3 = 0.0;
  u64 rho_support = 0;
  double T1 = 0.0, T2 = 0.0;
};

/// Dense census of rho(b,c) over b, c mod q with c != 0.
struct RhoCensus {
  PrimeModulus q;
  std::vector<std::uint32_t> counts;  // index b * q + c
  u64 enumerated = 0;                 // all tuples visited
  u64 admitted = 0;                   // tuples with c != 0 and h1 n2 != h2 n1
  u64 sigma1 = 0;
  u64 sigma2 = 0;
  MomentReport report;

  std::uint32_t rho(u64 b, u64 c) const { return counts[b * q.value() + c]; }
};

RhoCensus rho_census(const RhoConfig& cfg);

/// (1 + HN^3K/q)(1 + SN^3K/q)(1 + H/N)(1 + S/N)(HNS)^2 K.
double sigma2_bound(double H, double N, double S, double K, double q);

struct HolderCheck {
  double lhs = 0.0;  // sum rho(b,c) |sum_r theta_r Kl(b + rc)|
  double rhs = 0.0;  // Sigma1^{1-1/nu} (Sigma2 Sigma3)^{1/(2nu)}
  double sigma3 = 0.0;
  double bound3 = 0.0;  // q^2 R^nu + q R^{2nu}
  bool holds = false;
};

HolderCheck holder_check(const RhoCensus& census, const KloostermanTable& table, u64 R,
                         std::span<const cplx> theta, unsigned nu);

/// A(m) = sum_{b, c != 0} prod_j Kl((b + m_j) c). At most 12 entries.
double sum_product_A(std::span<const i64> m, const KloostermanTable& table);

/// sum_{b, c != 0} |sum_j coeffs[j] Kl(b + (first + j) c)|^{2 nu}. Parallel over c;
/// per-c partials are pairwise-summed in c order, so the value does not
/// depend on the thread count.
double power_moment(const KloostermanTable& table, std::span<const cplx> coeffs, i64 first,
                    unsigned nu, int threads = 0);

namespace reference {
/// Straight serial triple loop.
double power_moment_serial(const KloostermanTable& table, std::span<const cplx> coeffs, i64 first,
                           unsigned nu);
}  // namespace reference

struct MomentValue {
  double value = 0.0;
  double bound = 0.0;  // q^2 M^nu + q M^{2nu}
  double ratio = 0.0;
};

/// m runs over [1, M]; alpha.size() must equal M. Throws ResourceError when
/// q^2 M exceeds the budget.
MomentValue sigma3_moment(const KloostermanTable& table, u64 M, unsigned nu,
                          std::span<const cplx> alpha, std::uint64_t budget = kDefaultBudget,
                          int threads = 0);

struct StrataThresholds {
  double c1 = 10.0;
  double c2 = 1.0;
};

struct StrataCensus {
  u64 total = 0;
  u64 v_like = 0, w_like = 0, generic = 0;
  double v_ratio = 0.0;  // v_like / M^nu
  double w_ratio = 0.0;  // w_like / M^{3nu/2}
  double max_generic = 0.0;
  std::size_t distinct_evaluations = 0;
  std::vector<std::vector<i64>> v_tuples;
};

/// Classifies every m in [1, M]^{2nu} by |A(m)|: above c2 q^{3/2} is V-like,
/// in (c1 q, c2 q^{3/2}] W-like, otherwise generic. A(m) only depends on the
/// multiset of m_j up to a common translation, so values are cached on that.
StrataCensus strata_census(const KloostermanTable& table, u64 M, unsigned nu,
                           StrataThresholds thresholds = {},
                           std::uint64_t budget = kDefaultBudget);

}  // namespace btw
