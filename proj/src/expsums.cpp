#include "btw/expsums.hpp"

#include <omp.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numeric>
#include <string>

#include "btw/errors.hpp"
#include "btw/rng.hpp"
#include "btw/summation.hpp"

namespace btw {

namespace {

int thread_count(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

void require_table(const KloostermanTable& table, const PrimeModulus& q) {
  if (!(table.modulus() == q)) {
    throw DomainError("Kloosterman table is for q = " + std::to_string(table.modulus().value()) +
                      ", expected " + std::to_string(q.value()));
  }
}

std::vector<u64> inverses_of_range(u64 lo, u64 hi, const PrimeModulus& q) {
  std::vector<u64> out(hi + 1, 0);
  for (u64 n = lo; n <= hi; ++n) out[n] = q.inverse(static_cast<i64>(n));
  return out;
}

// Gauss-Legendre nodes on [-1, 1] expanded from Boost's half tables.
template <unsigned P>
std::pair<std::vector<double>, std::vector<double>> legendre_rule() {
  using Rule = boost::math::quadrature::gauss<double, P>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      nodes.push_back(0.0);
      weights.push_back(w[i]);
    } else {
      nodes.push_back(-x[i]);
      weights.push_back(w[i]);
      nodes.push_back(x[i]);
      weights.push_back(w[i]);
    }
  }
  return {nodes, weights};
}

// S(u,k;q)/sqrt(q) for any k, including q | k where S is a Ramanujan sum.
double kl_scaled(const KloostermanTable& table, const PrimeModulus& q, u64 u, i64 k) {
  const u64 kr = q.reduce(k);
  if (kr == 0) return (u == 0 ? static_cast<double>(q.value() - 1) : -1.0) / q.sqrt_q();
  return table[q.mul(u, kr)];
}

double int_pow(double v, unsigned e) {
  double r = 1.0;
  while (e) {
    if (e & 1u) r *= v;
    v *= v;
    e >>= 1u;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------- configs

QuintConfig QuintConfig::with_random_coefficients(const PrimeModulus& q, u64 a, u64 H, u64 K,
                                                  u64 M, u64 N, std::uint64_t seed) {
  QuintConfig cfg{q, a, H, K, M, N, {}, {}, seed};
  CounterRng rng(seed);
  cfg.beta.resize(N);
  for (cplx& b : cfg.beta) b = rng.unimodular();
  cfg.alpha.resize(M);
  for (cplx& al : cfg.alpha) al = rng.unimodular();
  return cfg;
}

QuintConfig QuintConfig::with_unit_coefficients(const PrimeModulus& q, u64 a, u64 H, u64 K, u64 M,
                                                u64 N) {
  return QuintConfig{q, a, H, K, M, N, std::vector<cplx>(N, 1.0), std::vector<cplx>(M, 1.0), 0};
}

void QuintConfig::validate() const {
  const u64 p = q.value();
  if (a % p == 0) throw DomainError("(a, q) = 1 is required");
  if (H == 0 || N == 0 || M == 0) throw DomainError("H, M, N must be positive");
  if (beta.size() != N) throw DomainError("beta must have N entries");
  if (alpha.size() != M) throw DomainError("alpha must have M entries");
  for (const cplx& b : beta) {
    if (std::abs(b) > 1.0 + 1e-12) throw DomainError("|beta_n| <= 1 is required");
  }
  for (const cplx& al : alpha) {
    if (std::abs(al) > 1.0 + 1e-12) throw DomainError("|alpha_m| <= 1 is required");
  }
  if (!(2 * N < p)) throw DomainError("2N < q is required");
  if (!(2 * H < p)) throw DomainError("2H < q is required");
  if (!(2 * K < p)) throw DomainError("K < q/2 is required");
}

// ---------------------------------------------------------------- quintilinear

cplx quint_sum_sharp(const QuintConfig& cfg, const KloostermanTable& table) {
  cfg.validate();
  require_table(table, cfg.q);
  const PrimeModulus& q = cfg.q;
  const double work = static_cast<double>(cfg.K) * cfg.H * cfg.H * cfg.N * cfg.N;
  if (work > static_cast<double>(kDefaultBudget)) throw ResourceError("quintilinear sum over budget");
  const std::vector<u64> nbar = inverses_of_range(cfg.N + 1, 2 * cfg.N, q);
  const u64 a = q.reduce_u(cfg.a);
  PairwiseSum<cplx> total;
  for (u64 n1 = cfg.N + 1; n1 <= 2 * cfg.N; ++n1) {
    for (u64 n2 = cfg.N + 1; n2 <= 2 * cfg.N; ++n2) {
      PairwiseSum<double> inner;
      for (u64 h1 = 1; h1 <= cfg.H; ++h1) {
        for (u64 h2 = 1; h2 <= cfg.H; ++h2) {
          const u64 u = q.mul(a, q.sub(q.mul(h1, nbar[n1]), q.mul(h2, nbar[n2])));
          for (u64 k = 1; k <= cfg.K; ++k) inner.add(table[q.mul(u, k)]);
        }
      }
      total.add(cfg.beta_at(n1) * std::conj(cfg.beta_at(n2)) * inner.total());
    }
  }
  return total.total() * q.sqrt_q();
}

// ---------------------------------------------------------------- Phi-tilde

PhiTilde::PhiTilde(const SmoothWeight& w, const PlateauBump& W, double M, const PrimeModulus& q,
                   std::uint64_t max_abs_k, double max_abs_ratio, double tol)
    : w_(w), q_(q), M_(M), max_k_(max_abs_k), max_ratio_(max_abs_ratio), tol_(tol) {
  if (!(M > 0.0)) throw DomainError("M must be positive");
  scale_ = w.mass() * w.mass() * M * W.integral();
  const double qd = static_cast<double>(q.value());
  const double lo = W.support_lo() * M;
  const double edges[4] = {lo, W.plateau_lo() * M, W.plateau_hi() * M, W.support_hi() * M};
  // Local frequency (cycles per unit t) of the integrand: |k|/q from e(-kt/q)
  // plus c/t^2 from the two Phi-hat factors, whose phase and sinc move like
  // x h/(n q t). Panel ends are equidistributed in the accumulated cycle count,
  // about one cycle per panel.
  const double kf = static_cast<double>(max_abs_k) / qd;
  const double c = 2.0 * w.x() * max_abs_ratio / qd;
  const auto r20 = legendre_rule<20>();
  const auto r30 = legendre_rule<30>();
  panels_ = 0;
  for (int s = 0; s < 3; ++s) {
    const double a = edges[s], b = edges[s + 1];
    const auto cycles = [&](double t) { return kf * (t - a) + c * (1.0 / a - 1.0 / t); };
    const double total = cycles(b);
    const auto count = static_cast<std::size_t>(std::max(2.0, std::ceil(total) + 1.0));
    panels_ += count;
    std::vector<double> ends(count + 1);
    ends.front() = a;
    ends.back() = b;
    for (std::size_t j = 1; j < count; ++j) {
      const double target = total * static_cast<double>(j) / static_cast<double>(count);
      double l = a, r = b;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (l + r);
        (cycles(m) < target ? l : r) = m;
      }
      ends[j] = 0.5 * (l + r);
    }
    for (std::size_t p = 0; p < count; ++p) {
      const double width = ends[p + 1] - ends[p];
      const double mid = ends[p] + 0.5 * width;
      auto fill = [&](Nodes& nodes, const std::pair<std::vector<double>, std::vector<double>>& rule) {
        for (std::size_t i = 0; i < rule.first.size(); ++i) {
          const double t = mid + 0.5 * width * rule.first[i];
          nodes.t.push_back(t);
          nodes.weight.push_back(0.5 * width * rule.second[i] * W(t / M));
        }
      };
      fill(g20_, r20);
      fill(g30_, r30);
    }
  }
}

PhiTilde::Ratio PhiTilde::reduced(i64 h, u64 n) {
  const u64 g = std::gcd(static_cast<u64>(h < 0 ? -h : h), n);
  return g == 0 ? Ratio{h, n} : Ratio{h / static_cast<i64>(g), n / g};
}

std::shared_ptr<const PhiTilde::Column> PhiTilde::column(const Ratio& key) const {
  {
    const std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = columns_.find(key); it != columns_.end()) return it->second;
  }
  auto col = std::make_shared<Column>();
  const double numer = static_cast<double>(key.first);
  const double denom = static_cast<double>(key.second) * static_cast<double>(q_.value());
  auto eval = [&](const Nodes& nodes, std::vector<cplx>& out) {
    out.resize(nodes.t.size());
    for (std::size_t i = 0; i < nodes.t.size(); ++i) {
      out[i] = nodes.weight[i] == 0.0 ? cplx{} : w_.fourier(numer / (nodes.t[i] * denom));
    }
  };
  eval(g20_, col->first);
  eval(g30_, col->second);
  const std::lock_guard<std::mutex> lock(mutex_);
  return columns_.emplace(key, std::move(col)).first->second;
}

cplx PhiTilde::integrate(const Nodes& nodes, const std::vector<cplx>& f1,
                         const std::vector<cplx>& f2, i64 k) const {
  PairwiseSum<cplx> acc;
  const double kq = static_cast<double>(k) / static_cast<double>(q_.value());
  for (std::size_t i = 0; i < nodes.t.size(); ++i) {
    if (nodes.weight[i] == 0.0) continue;
    acc.add(nodes.weight[i] * f1[i] * std::conj(f2[i]) * e(-kq * nodes.t[i]));
  }
  return acc.total();
}

cplx PhiTilde::operator()(i64 k, i64 h1, i64 h2, u64 n1, u64 n2) const {
  const auto ratio = [](i64 h, u64 n) { return std::abs(static_cast<double>(h)) / static_cast<double>(n); };
  if (static_cast<u64>(k < 0 ? -k : k) > max_k_ ||
      std::max(ratio(h1, n1), ratio(h2, n2)) > max_ratio_ * (1.0 + 1e-12)) {
    throw DomainError("Phi-tilde requested outside its planned (k, h/n) range");
  }
  const auto key = std::make_tuple(k, reduced(h1, n1), reduced(h2, n2));
  {
    const std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = values_.find(key); it != values_.end()) return it->second;
  }
  const auto c1 = column(std::get<1>(key));
  const auto c2 = column(std::get<2>(key));
  const cplx coarse = integrate(g20_, c1->first, c2->first, k);
  const cplx fine = integrate(g30_, c1->second, c2->second, k);
  if (std::abs(fine - coarse) > tol_ * scale_) {
    throw NumericalError("Phi-tilde quadrature disagreement " + std::to_string(std::abs(fine - coarse)) +
                         " at k = " + std::to_string(k));
  }
  const std::lock_guard<std::mutex> lock(mutex_);
  values_.emplace(key, fine);
  return fine;
}

// ---------------------------------------------------------------- Sigma

namespace {

void require_w_support(const QuintConfig& cfg, const PlateauBump& W) {
  if (!(W.support_hi() * static_cast<double>(cfg.M) < static_cast<double>(cfg.q.value()))) {
    throw DomainError("the support of W(t/M) must lie below q (2.1 M < q)");
  }
}

SigmaResult sigma_core(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W,
                       const KloostermanTable& table, u64 K) {
  cfg.validate();
  require_table(table, cfg.q);
  require_w_support(cfg, W);
  if (K == 0) throw DomainError("K >= 1 is required");
  const PrimeModulus& q = cfg.q;
  const PhiTilde pt(w, W, static_cast<double>(cfg.M), q, K,
                    static_cast<double>(cfg.H) / static_cast<double>(cfg.N + 1));
  const std::vector<u64> nbar = inverses_of_range(cfg.N + 1, 2 * cfg.N, q);
  const u64 a = q.reduce_u(cfg.a);
  const u64 N = cfg.N;
  const std::size_t pairs = N * N;
  std::vector<cplx> partial(pairs), k0_partial(pairs);
  std::vector<double> gcd_partial(pairs);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t p = 0; p < pairs; ++p) {
    const u64 n1 = N + 1 + p / N;
    const u64 n2 = N + 1 + p % N;
    PairwiseSum<cplx> acc, acc0;
    double gcds = 0.0;
    for (u64 h1 = 1; h1 <= cfg.H; ++h1) {
      for (u64 h2 = 1; h2 <= cfg.H; ++h2) {
        const u64 u = q.mul(a, q.sub(q.mul(h1, nbar[n1]), q.mul(h2, nbar[n2])));
        const auto h1s = static_cast<i64>(h1), h2s = static_cast<i64>(h2);
        for (u64 k = 1; k <= K; ++k) {
          const auto ks = static_cast<i64>(k);
          acc.add(pt(ks, h1s, h2s, n1, n2) * kl_scaled(table, q, u, ks));
          acc.add(pt(-ks, h1s, h2s, n1, n2) * kl_scaled(table, q, u, -ks));
        }
        const double ramanujan = u == 0 ? static_cast<double>(q.value() - 1) : -1.0;
        acc0.add(pt(0, h1s, h2s, n1, n2) * ramanujan);
        const i64 det = h1s * static_cast<i64>(n2) - h2s * static_cast<i64>(n1);
        gcds += det % static_cast<i64>(q.value()) == 0 ? static_cast<double>(q.value()) : 1.0;
      }
    }
    const cplx coef = cfg.beta_at(n1) * std::conj(cfg.beta_at(n2)) /
                      (static_cast<double>(n1) * static_cast<double>(n2));
    partial[p] = coef * acc.total();
    k0_partial[p] = coef * acc0.total();
    gcd_partial[p] = gcds;
  }

  const double Md = static_cast<double>(cfg.M);
  const double qd = static_cast<double>(q.value());
  const cplx sigma = pairwise_sum<cplx>(partial) / (q.sqrt_q() * Md);
  SigmaResult out;
  out.sigma = sigma.real();
  out.sigma_imag = sigma.imag();
  out.K = K;
  out.k0_term = pairwise_sum<cplx>(k0_partial) / (qd * Md);
  const double Nd = static_cast<double>(N);
  out.k0_bound = w.x() * w.x() / (qd * Nd * Nd) * pairwise_sum<double>(gcd_partial);
  return out;
}

}  // namespace

SigmaResult sigma_weighted(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W,
                           const KloostermanTable& table, double eps) {
  if (!(eps > 0.0)) throw DomainError("eps > 0 is required");
  const double qd = static_cast<double>(cfg.q.value());
  const double Md = static_cast<double>(cfg.M);
  if (!(Md > 2.0 * std::pow(qd, eps))) throw DomainError("M > 2 q^eps is required");
  const double Kreal = std::pow(qd, 1.0 + eps) / Md;
  if (!(Kreal < qd / 2.0)) throw DomainError("K = q^{1+eps}/M < q/2 is required");
  const auto K = static_cast<u64>(std::floor(Kreal));
  if (K == 0) throw DomainError("K = q^{1+eps}/M must be at least 1");
  SigmaResult out = sigma_core(cfg, w, W, table, K);
  const double H = static_cast<double>(cfg.H), N = static_cast<double>(cfg.N);
  out.error_formula = std::pow(w.x(), 2.0 + eps) * H / N * (H * N / qd + 1.0);
  return out;
}

SigmaResult sigma_fixed_k(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W,
                          const KloostermanTable& table, u64 K) {
  SigmaResult out = sigma_core(cfg, w, W, table, K);
  const double H = static_cast<double>(cfg.H), N = static_cast<double>(cfg.N);
  out.error_formula = w.x() * w.x() * H / N * (H * N / static_cast<double>(cfg.q.value()) + 1.0);
  return out;
}

namespace {

// X_m = sum_{h<=H} sum_n (beta_n/n) Phi-hat(h/(mnq)) e(ah (mn)bar/q).
cplx inner_x(const QuintConfig& cfg, const SmoothWeight& w, u64 m) {
  const PrimeModulus& q = cfg.q;
  const u64 a = q.reduce_u(cfg.a);
  const double qd = static_cast<double>(q.value());
  PairwiseSum<cplx> acc;
  for (u64 n = cfg.N + 1; n <= 2 * cfg.N; ++n) {
    const u64 inv = q.inverse(static_cast<i64>(q.mul(q.reduce_u(m), q.reduce_u(n))));
    const double mn = static_cast<double>(m) * static_cast<double>(n);
    for (u64 h = 1; h <= cfg.H; ++h) {
      const cplx term = cfg.beta_at(n) / static_cast<double>(n) *
                        w.fourier(static_cast<double>(h) / (mn * qd)) *
                        e_q(static_cast<i64>(q.mul(q.mul(a, h), inv)), q);
      acc.add(term);
    }
  }
  return acc.total();
}

}  // namespace

cplx r_bilinear(const QuintConfig& cfg, const SmoothWeight& w) {
  cfg.validate();
  if (!(2 * cfg.M < cfg.q.value())) throw DomainError("2M < q is required");
  PairwiseSum<cplx> acc;
  for (u64 m = cfg.M + 1; m <= 2 * cfg.M; ++m) {
    acc.add(cfg.alpha_at(m) / static_cast<double>(m) * inner_x(cfg, w, m));
  }
  return acc.total();
}

double mean_square_direct(const QuintConfig& cfg, const SmoothWeight& w, const PlateauBump& W) {
  cfg.validate();
  require_w_support(cfg, W);
  const double Md = static_cast<double>(cfg.M);
  const auto lo = static_cast<u64>(std::ceil(W.support_lo() * Md));
  const auto hi = static_cast<u64>(std::floor(W.support_hi() * Md));
  PairwiseSum<double> acc;
  for (u64 m = std::max<u64>(lo, 1); m <= hi; ++m) {
    const double weight = W(static_cast<double>(m) / Md);
    if (weight == 0.0) continue;
    acc.add(weight * std::norm(inner_x(cfg, w, m)));
  }
  return acc.total() / Md;
}

// ---------------------------------------------------------------- shifting trick

ShiftConfig ShiftConfig::sampled(u64 H, u64 R, std::size_t count, std::uint64_t seed) {
  if (R == 0 || H % (4 * R) != 0) throw DomainError("4RS = H needs R >= 1 dividing H/4");
  ShiftConfig cfg;
  cfg.R = R;
  cfg.S = H / (4 * R);
  if (cfg.S == 0) throw DomainError("S = H/(4R) must be at least 1");
  CounterRng rng(seed);
  auto nonzero = [&](i64 bound) {
    const i64 v = rng.uniform_int(1, bound);
    return rng.uniform_int(0, 1) == 0 ? v : -v;
  };
  for (std::size_t i = 0; i < count; ++i) {
    Shift s;
    s.r = nonzero(static_cast<i64>(2 * cfg.R));
    s.s1 = nonzero(static_cast<i64>(2 * cfg.S));
    s.s2 = nonzero(static_cast<i64>(2 * cfg.S));
    cfg.shifts.push_back(s);
  }
  cfg.theta.assign(cfg.R, 1.0);
  return cfg;
}

void ShiftConfig::validate(u64 H) const {
  if (R == 0 || S == 0) throw DomainError("R, S >= 1 is required");
  if (4 * R * S != H) throw DomainError("4RS = H is required");
  if (theta.size() != R) throw DomainError("theta must have R entries");
  for (const cplx& t : theta) {
    if (std::abs(std::abs(t) - 1.0) > 1e-12) throw DomainError("|theta_r| = 1 is required");
  }
}

std::vector<cplx> random_theta(u64 R, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<cplx> theta(R);
  for (cplx& t : theta) t = rng.unimodular();
  return theta;
}

ShiftCheckReport shift_identity_check(const QuintConfig& cfg, const ShiftConfig& shift,
                                      const SmoothWeight& w, const PlateauBump& W,
                                      const KloostermanTable& table) {
  cfg.validate();
  shift.validate(cfg.H);
  require_table(table, cfg.q);
  require_w_support(cfg, W);
  const PrimeModulus& q = cfg.q;
  const TentWeight phi(static_cast<double>(cfg.H));
  const PhiTilde pt(w, W, static_cast<double>(cfg.M), q, cfg.K,
                    static_cast<double>(cfg.H + 1) / static_cast<double>(cfg.N + 1));
  const std::vector<u64> nbar = inverses_of_range(cfg.N + 1, 2 * cfg.N, q);
  const u64 a = q.reduce_u(cfg.a);
  const double norm = 1.0 / (q.sqrt_q() * static_cast<double>(cfg.M));
  const auto H = static_cast<i64>(cfg.H);

  // The tent weight vanishes at every integer outside [1, H]; the loops below run
  // over [0, H+1] so that the zero weights at the ends are part of the sum.
  const u64 N = cfg.N;
  auto sum_for = [&](const Shift& s) {
    std::vector<cplx> partial(N * N);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t p = 0; p < N * N; ++p) {
      const u64 n1 = N + 1 + p / N;
      const u64 n2 = N + 1 + p % N;
      const cplx coef = cfg.beta_at(n1) * std::conj(cfg.beta_at(n2)) /
                        (static_cast<double>(n1) * static_cast<double>(n2));
      PairwiseSum<cplx> acc;
      for (i64 k = -static_cast<i64>(cfg.K); k <= static_cast<i64>(cfg.K); ++k) {
        if (k == 0) continue;
        const u64 ak = q.mul(a, q.reduce(k));
        const u64 c = q.mul(ak, q.sub(q.mul(q.reduce(s.s1), nbar[n1]), q.mul(q.reduce(s.s2), nbar[n2])));
        const u64 rc = q.mul(q.reduce(s.r), c);
        for (i64 g1 = -s.r * s.s1; g1 <= H + 1 - s.r * s.s1; ++g1) {
          const i64 h1 = g1 + s.r * s.s1;
          const double w1 = phi(static_cast<double>(h1));
          if (w1 == 0.0) continue;
          for (i64 g2 = -s.r * s.s2; g2 <= H + 1 - s.r * s.s2; ++g2) {
            const i64 h2 = g2 + s.r * s.s2;
            const double w2 = phi(static_cast<double>(h2));
            if (w2 == 0.0) continue;
            const u64 b = q.mul(ak, q.sub(q.mul(q.reduce(g1), nbar[n1]), q.mul(q.reduce(g2), nbar[n2])));
            acc.add(w1 * w2 * pt(k, h1, h2, n1, n2) * table[q.add(b, rc)]);
          }
        }
      }
      partial[p] = coef * acc.total();
    }
    return (pairwise_sum<cplx>(partial) * norm).real();
  };

  ShiftCheckReport report;
  report.sigma_phi = sum_for(Shift{0, 0, 0});
  report.sigma_sharp = sigma_fixed_k(cfg, w, W, table, cfg.K).sigma;
  const double scale = std::abs(report.sigma_phi);
  for (const Shift& s : shift.shifts) {
    if (s.r == 0 || s.s1 == 0 || s.s2 == 0) throw DomainError("shifts r, s1, s2 must be nonzero");
    const double d = std::abs(sum_for(s) - report.sigma_phi);
    report.discrepancies.push_back(d);
    report.max_discrepancy = std::max(report.max_discrepancy, d);
    report.max_relative = std::max(report.max_relative, scale > 0.0 ? d / scale : d);
  }
  return report;
}

// ---------------------------------------------------------------- rho census

double RhoConfig::tuple_count() const {
  const double h = 4.0 * static_cast<double>(H) + 1.0;
  const double n = static_cast<double>(N), s = static_cast<double>(S);
  return h * h * n * n * s * s * 2.0 * static_cast<double>(K);
}

void RhoConfig::validate() const {
  const u64 p = q.value();
  if (a % p == 0) throw DomainError("(a, q) = 1 is required");
  if (!(2 * N < p)) throw DomainError("2N < q is required");
  if (!(2 * K < p)) throw DomainError("K < q/2 is required");
  if (tuple_count() > static_cast<double>(budget)) {
    throw ResourceError("rho census needs " + std::to_string(tuple_count()) +
                        " tuples, over the budget " + std::to_string(budget));
  }
  if (static_cast<double>(p) * static_cast<double>(p) > static_cast<double>(1u << 28)) {
    throw ResourceError("dense rho table needs q^2 <= 2^28");
  }
}

double sigma2_bound(double H, double N, double S, double K, double q) {
  const double n3 = N * N * N;
  const double hns = H * N * S;
  return (1.0 + H * n3 * K / q) * (1.0 + S * n3 * K / q) * (1.0 + H / N) * (1.0 + S / N) * hns * hns * K;
}

RhoCensus rho_census(const RhoConfig& cfg) {
  cfg.validate();
  const PrimeModulus& q = cfg.q;
  const u64 p = q.value();
  const std::vector<u64> nbar = inverses_of_range(cfg.N + 1, 2 * cfg.N, q);
  const u64 a = q.reduce_u(cfg.a);
  const auto H2 = static_cast<i64>(2 * cfg.H);
  std::vector<i64> ks;
  for (i64 k = -static_cast<i64>(cfg.K); k <= static_cast<i64>(cfg.K); ++k) {
    if (k != 0) ks.push_back(k);
  }

  RhoCensus census{q, std::vector<std::uint32_t>(p * p, 0), 0, 0, 0, 0, {}};
  u64 enumerated = 0, admitted = 0;
#pragma omp parallel reduction(+ : enumerated, admitted)
  {
    std::vector<std::uint32_t> local(p * p, 0);
    std::vector<u64> A1(2 * H2 + 1), A2(2 * H2 + 1);
#pragma omp for schedule(static)
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      const u64 ak = q.mul(a, q.reduce(ks[ki]));
      for (u64 n1 = cfg.N + 1; n1 <= 2 * cfg.N; ++n1) {
        for (u64 n2 = cfg.N + 1; n2 <= 2 * cfg.N; ++n2) {
          for (i64 h = -H2; h <= H2; ++h) {
            A1[h + H2] = q.mul(ak, q.mul(q.reduce(h), nbar[n1]));
            A2[h + H2] = q.mul(ak, q.mul(q.reduce(h), nbar[n2]));
          }
          for (u64 s1 = cfg.S + 1; s1 <= 2 * cfg.S; ++s1) {
            for (u64 s2 = cfg.S + 1; s2 <= 2 * cfg.S; ++s2) {
              const u64 c = q.mul(ak, q.sub(q.mul(s1, nbar[n1]), q.mul(s2, nbar[n2])));
              enumerated += static_cast<u64>((2 * H2 + 1) * (2 * H2 + 1));
              if (c == 0) continue;
              for (i64 h1 = -H2; h1 <= H2; ++h1) {
                for (i64 h2 = -H2; h2 <= H2; ++h2) {
                  if (h1 * static_cast<i64>(n2) == h2 * static_cast<i64>(n1)) continue;
                  const u64 b = q.sub(A1[h1 + H2], A2[h2 + H2]);
                  ++local[b * p + c];
                  ++admitted;
                }
              }
            }
          }
        }
      }
    }
#pragma omp critical(btw_rho_merge)
    for (std::size_t i = 0; i < local.size(); ++i) census.counts[i] += local[i];
  }
  census.enumerated = enumerated;
  census.admitted = admitted;

  u64 support = 0;
  for (const std::uint32_t v : census.counts) {
    census.sigma1 += v;
    census.sigma2 += static_cast<u64>(v) * v;
    support += v > 0;
  }
  MomentReport& r = census.report;
  const double H = static_cast<double>(cfg.H), N = static_cast<double>(cfg.N);
  const double S = static_cast<double>(cfg.S), K = static_cast<double>(cfg.K);
  const double qd = static_cast<double>(p);
  r.sigma1 = static_cast<double>(census.sigma1);
  r.sigma2 = static_cast<double>(census.sigma2);
  r.bound1 = H * H * N * N * S * S * K;
  r.bound2 = sigma2_bound(H, N, S, K, qd);
  // Empty ranges give an all-zero census; report zero ratios rather than 0/0.
  r.ratio1 = r.bound1 > 0.0 ? r.sigma1 / r.bound1 : 0.0;
  r.ratio2 = r.bound2 > 0.0 ? r.sigma2 / r.bound2 : 0.0;
  r.rho_support = support;
  r.T1 = 32.0 * H * N * N * N * K / qd;
  r.T2 = 32.0 * S * N * N * N * K / qd;
  return census;
}

HolderCheck holder_check(const RhoCensus& census, const KloostermanTable& table, u64 R,
                         std::span<const cplx> theta, unsigned nu) {
  require_table(table, census.q);
  if (nu == 0) throw DomainError("nu >= 1 is required");
  if (theta.size() != R) throw DomainError("theta must have R entries");
  const PrimeModulus& q = census.q;
  const u64 p = q.value();
  std::vector<double> lhs_c(p - 1), s3_c(p - 1);
#pragma omp parallel for schedule(static)
  for (u64 c = 1; c < p; ++c) {
    std::vector<u64> offs(R);
    for (u64 i = 0; i < R; ++i) offs[i] = q.mul(q.reduce_u(R + 1 + i), c);
    PairwiseSum<double> lhs, s3;
    for (u64 b = 0; b < p; ++b) {
      cplx T{};
      for (u64 i = 0; i < R; ++i) T += theta[i] * table[q.add(b, offs[i])];
      const double absT = std::abs(T);
      lhs.add(static_cast<double>(census.rho(b, c)) * absT);
      s3.add(int_pow(absT * absT, nu));
    }
    lhs_c[c - 1] = lhs.total();
    s3_c[c - 1] = s3.total();
  }
  HolderCheck out;
  out.lhs = pairwise_sum<double>(lhs_c);
  out.sigma3 = pairwise_sum<double>(s3_c);
  const double n = static_cast<double>(nu);
  const double s1 = static_cast<double>(census.sigma1), s2 = static_cast<double>(census.sigma2);
  out.rhs = std::pow(s1, 1.0 - 1.0 / n) * std::pow(s2 * out.sigma3, 1.0 / (2.0 * n));
  const double qd = static_cast<double>(p), Rd = static_cast<double>(R);
  out.bound3 = qd * qd * std::pow(Rd, n) + qd * std::pow(Rd, 2.0 * n);
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

// ---------------------------------------------------------------- moments

double sum_product_A(std::span<const i64> m, const KloostermanTable& table) {
  if (m.empty() || m.size() > 12) throw DomainError("A(m) takes between 1 and 12 shifts");
  const PrimeModulus& q = table.modulus();
  const u64 p = q.value();
  std::vector<double> partial(p - 1);
#pragma omp parallel for schedule(static)
  for (u64 c = 1; c < p; ++c) {
    std::array<u64, 12> idx{};
    for (std::size_t j = 0; j < m.size(); ++j) idx[j] = q.mul(q.reduce(m[j]), c);  // b = 0
    PairwiseSum<double> acc;
    for (u64 b = 0; b < p; ++b) {
      double prod = 1.0;
      for (std::size_t j = 0; j < m.size(); ++j) {
        prod *= table[idx[j]];
        idx[j] = q.add(idx[j], c);
      }
      acc.add(prod);
    }
    partial[c - 1] = acc.total();
  }
  return pairwise_sum<double>(partial);
}

double power_moment(const KloostermanTable& table, std::span<const cplx> coeffs, i64 first,
                    unsigned nu, int threads) {
  if (nu == 0) throw DomainError("nu >= 1 is required");
  const PrimeModulus& q = table.modulus();
  const u64 p = q.value();
  const std::size_t L = coeffs.size();
  std::vector<double> partial(p - 1);
#pragma omp parallel for schedule(static) num_threads(thread_count(threads))
  for (u64 c = 1; c < p; ++c) {
    std::vector<u64> idx(L);
    for (std::size_t j = 0; j < L; ++j) idx[j] = q.mul(q.reduce(first + static_cast<i64>(j)), c);
    PairwiseSum<double> acc;
    for (u64 b = 0; b < p; ++b) {
      cplx T{};
      for (std::size_t j = 0; j < L; ++j) {
        T += coeffs[j] * table[idx[j]];
        if (++idx[j] == p) idx[j] = 0;
      }
      acc.add(int_pow(std::norm(T), nu));
    }
    partial[c - 1] = acc.total();
  }
  return pairwise_sum<double>(partial);
}

namespace reference {

double power_moment_serial(const KloostermanTable& table, std::span<const cplx> coeffs, i64 first,
                           unsigned nu) {
  const PrimeModulus& q = table.modulus();
  const auto p = static_cast<i64>(q.value());
  PairwiseSum<double> acc;
  for (i64 b = 0; b < p; ++b) {
    for (i64 c = 1; c < p; ++c) {
      cplx T{};
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        T += coeffs[j] * table.at(b + (first + static_cast<i64>(j)) * c);
      }
      acc.add(std::pow(std::abs(T), 2.0 * nu));
    }
  }
  return acc.total();
}

}  // namespace reference

MomentValue sigma3_moment(const KloostermanTable& table, u64 M, unsigned nu,
                          std::span<const cplx> alpha, std::uint64_t budget, int threads) {
  const double qd = static_cast<double>(table.modulus().value());
  if (qd < 5) throw DomainError("q >= 5 is required");
  if (M == 0) throw DomainError("M >= 1 is required");
  if (nu == 0) throw DomainError("nu >= 1 is required");
  if (alpha.size() != M) throw DomainError("alpha must have M entries");
  for (const cplx& al : alpha) {
    if (std::abs(al) > 1.0 + 1e-12) throw DomainError("|alpha_m| <= 1 is required");
  }
  const double cost = qd * qd * static_cast<double>(M);
  if (cost > static_cast<double>(budget)) {
    throw ResourceError("moment needs q^2 M = " + std::to_string(cost) + " over the budget " +
                        std::to_string(budget));
  }
  MomentValue out;
  out.value = power_moment(table, alpha, 1, nu, threads);
  const double Md = static_cast<double>(M), n = static_cast<double>(nu);
  out.bound = qd * qd * std::pow(Md, n) + qd * std::pow(Md, 2.0 * n);
  out.ratio = out.value / out.bound;
  return out;
}

StrataCensus strata_census(const KloostermanTable& table, u64 M, unsigned nu,
                           StrataThresholds thresholds, std::uint64_t budget) {
  if (M == 0 || nu == 0) throw DomainError("M, nu >= 1 are required");
  if (2 * nu > 12) throw DomainError("2 nu <= 12 is required");
  const double qd = static_cast<double>(table.modulus().value());
  const std::size_t len = 2 * nu;
  const double tuples = std::pow(static_cast<double>(M), static_cast<double>(len));
  if (tuples > static_cast<double>(budget)) {
    throw ResourceError("strata census would enumerate " + std::to_string(tuples) + " tuples");
  }
  const double per_eval = qd * qd * static_cast<double>(len);
  const double hi = thresholds.c2 * std::pow(qd, 1.5);
  const double lo = thresholds.c1 * qd;

  StrataCensus out;
  std::map<std::vector<i64>, double> cache;
  double spent = 0.0;
  std::vector<i64> m(len, 1);
  while (true) {
    std::vector<i64> key = m;
    std::sort(key.begin(), key.end());
    const i64 base = key.front();
    for (i64& v : key) v -= base;
    auto it = cache.find(key);
    if (it == cache.end()) {
      spent += per_eval;
      if (spent > static_cast<double>(budget)) throw ResourceError("strata census over budget");
      it = cache.emplace(key, sum_product_A(key, table)).first;
    }
    const double value = std::abs(it->second);
    ++out.total;
    if (value > hi) {
      ++out.v_like;
      out.v_tuples.push_back(m);
    } else if (value > lo) {
      ++out.w_like;
    } else {
      ++out.generic;
      out.max_generic = std::max(out.max_generic, value);
    }
    std::size_t pos = 0;
    while (pos < len && m[pos] == static_cast<i64>(M)) m[pos++] = 1;
    if (pos == len) break;
    ++m[pos];
  }
  out.distinct_evaluations = cache.size();
  const double Md = static_cast<double>(M), n = static_cast<double>(nu);
  out.v_ratio = static_cast<double>(out.v_like) / std::pow(Md, n);
  out.w_ratio = static_cast<double>(out.w_like) / std::pow(Md, 1.5 * n);
  return out;
}

}  // namespace btw
