#include "btw/kloosterman.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <new>
#include <numbers>
#include <ostream>
#include <string>

#include "btw/dft.hpp"
#include "btw/errors.hpp"
#include "btw/rng.hpp"
#include "btw/summation.hpp"

namespace btw {

namespace {

void require_narrow(const PrimeModulus& q) {
  if (q.value() >= (u64{1} << 32)) {
    throw ResourceError("direct Kloosterman evaluation needs q < 2^32");
  }
}

void check_realness(double imag, const PrimeModulus& q) {
  if (std::abs(imag) > 1e-6 * q.sqrt_q()) {
    throw NumericalError("Kloosterman sum has imaginary part " + std::to_string(imag) +
                         " > 1e-6 sqrt(q) at q = " + std::to_string(q.value()));
  }
}

void put_u64_le(std::ostream& out, u64 v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

u64 get_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw DomainError("truncated Kloosterman table file");
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

KloostermanEvaluator::KloostermanEvaluator(const PrimeModulus& q) : q_(q) {
  require_narrow(q);
  inverses_ = inverse_table(q);
  const u64 n = q.value();
  cos_.resize(n);
  sin_.resize(n);
  for (u64 r = 0; r < n; ++r) {
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(r) / static_cast<double>(n));
    cos_[r] = std::cos(angle);
    sin_[r] = std::sin(angle);
  }
}

cplx KloostermanEvaluator::raw_sum(i64 m, i64 n) const {
  const u64 q = q_.value();
  const u64 mm = q_.reduce(m);
  const u64 nn = q_.reduce(n);
  PairwiseSum<double> re;
  PairwiseSum<double> im;
  for (u64 x = 1; x < q; ++x) {
    const u64 idx = q_.add(q_.mul(mm, x), q_.mul(nn, inverses_[x]));
    re.add(cos_[idx]);
    im.add(sin_[idx]);
  }
  return {re.total(), im.total()};
}

double KloostermanEvaluator::sum(i64 m, i64 n) const {
  const cplx s = raw_sum(m, n);
  check_realness(s.imag(), q_);
  return s.real();
}

double kloosterman_direct(i64 m, i64 n, const PrimeModulus& q) {
  return KloostermanEvaluator(q).sum(m, n);
}

double kl(i64 z, const PrimeModulus& q) { return kloosterman_direct(z, 1, q) / q.sqrt_q(); }

KloostermanTable::KloostermanTable(const PrimeModulus& q, std::vector<double> values)
    : q_(q), values_(std::move(values)) {
  if (values_.size() != q.value()) throw DomainError("Kloosterman table length must equal q");
}

void KloostermanTable::save_binary(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 8);
  put_u64_le(out, q_.value());
  for (double v : values_) put_u64_le(out, std::bit_cast<u64>(v));
  if (!out) throw DomainError("write failed for " + path.string());
}

KloostermanTable KloostermanTable::load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DomainError(path.string() + " is not a Kloosterman table (bad magic)");
  }
  const PrimeModulus q(get_u64_le(in));
  std::vector<double> values(q.value());
  for (double& v : values) v = std::bit_cast<double>(get_u64_le(in));
  return KloostermanTable(q, std::move(values));
}

void KloostermanTable::write_csv(std::ostream& out) const {
  out << "a,kl\n";
  char buf[64];
  for (std::size_t a = 0; a < values_.size(); ++a) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", a, values_[a]);
    out << buf;
  }
}

KloostermanTable build_table(const PrimeModulus& q, std::uint64_t max_modulus) {
  if (q.value() > max_modulus) {
    throw ResourceError("q = " + std::to_string(q.value()) + " exceeds the table cap " +
                        std::to_string(max_modulus));
  }
  require_narrow(q);
  const u64 p = q.value();
  const std::size_t n = p - 1;
  const u64 g = q.primitive_root();
  const double inv_sqrt = 1.0 / q.sqrt_q();

  try {
    std::vector<cplx> u(n);
    std::vector<cplx> spectrum(n);

    // u_j = e(g^j / q); chunks start from an independently computed power.
    constexpr std::size_t kChunk = 1 << 15;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = c * kChunk;
      const std::size_t hi = std::min(n, lo + kChunk);
      u64 pw = q.pow(g, lo);
      for (std::size_t j = lo; j < hi; ++j) {
        u[j] = e_q(static_cast<i64>(pw), q);
        pw = q.mul(pw, g);
      }
    }

    const DftPlan plan(n);
    plan.forward(u, spectrum);
    for (cplx& v : spectrum) v = std::conj(v * v);
    plan.forward(spectrum, u);
    spectrum = {};

    std::vector<double> values(p);
    values[0] = -inv_sqrt;
    const double scale = 1.0 / static_cast<double>(n);
    double worst_imag = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst_imag)
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = c * kChunk;
      const std::size_t hi = std::min(n, lo + kChunk);
      u64 pw = q.pow(g, lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const cplx s = std::conj(u[i]) * scale;
        worst_imag = std::max(worst_imag, std::abs(s.imag()));
        values[pw] = s.real() * inv_sqrt;
        pw = q.mul(pw, g);
      }
    }
    check_realness(worst_imag, q);
    return KloostermanTable(q, std::move(values));
  } catch (const std::bad_alloc&) {
    throw ResourceError("out of memory building the Kloosterman table for q = " + std::to_string(p));
  }
}

namespace reference {

KloostermanTable build_table_direct(const PrimeModulus& q) {
  const KloostermanEvaluator eval(q);
  std::vector<double> values(q.value());
  for (u64 a = 0; a < q.value(); ++a) values[a] = eval.normalized(static_cast<i64>(a));
  return KloostermanTable(q, std::move(values));
}

}  // namespace reference

WeilReport weil_check(const PrimeModulus& q, std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw DomainError("weil_check needs trials >= 1");
  const KloostermanEvaluator eval(q);
  CounterRng rng(seed);
  const auto hi = static_cast<i64>(q.value() - 1);
  WeilReport report;
  report.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const i64 m = rng.uniform_int(1, hi);
    const i64 n = rng.uniform_int(1, hi);
    const double ratio = std::abs(eval.sum(m, n)) / (2.0 * q.sqrt_q());
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.argmax_m = m;
      report.argmax_n = n;
    }
  }
  report.within_bound = report.max_ratio <= 1.0 + 1e-12;
  return report;
}

}  // namespace btw
