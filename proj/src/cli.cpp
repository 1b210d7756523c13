#include "btw/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <sstream>

#include "btw/apsieve.hpp"
#include "btw/bounds.hpp"
#include "btw/errors.hpp"
#include "btw/expsums.hpp"
#include "btw/kloosterman.hpp"
#include "btw/modmath.hpp"
#include "btw/rng.hpp"
#include "btw/smoothweight.hpp"

namespace btw::cli {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::string> kSubcommands = {
    "kl",    "table", "weil",    "pi-ap",   "bt-scan", "poisson-check", "quint", "sigma",
    "shift-check", "rho", "moments", "strata", "bounds", "optimize", "plan"};

// ---------------------------------------------------------------- output

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    rows_.push_back(std::move(r));
  }
  void write(std::ostream& out) const {
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }
  bool empty() const { return rows_.empty(); }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Report {
  json derived = json::object();
  json results = json::object();
  json bounds = json::object();
  json ratios = json::object();
  std::optional<Table> table;
};

json complex_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}, {"abs", std::abs(z)}}; }

// CSV fallback for commands without a natural table: flattened results.
void flatten(const json& j, const std::string& prefix, Table& t) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, t);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), t);
  } else if (j.is_number_float()) {
    t.row(prefix, j.get<double>());
  } else if (j.is_string()) {
    t.row(prefix, j.get<std::string>());
  } else {
    t.row(prefix, j.dump());
  }
}

// ---------------------------------------------------------------- parameters

struct Globals {
  std::uint64_t seed = 0;
  std::string threads = "auto";
  std::uint64_t budget = kDefaultBudget;
  std::string out;
  std::string format = "json";
};

// Binds flags of one subcommand and remembers how to print their resolved values.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, var, help)
                           ->capture_default_str()
                           ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    dump_.emplace_back([name, &var](json& j) { j[key(name)] = var; });
    return opt;
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + name, var, help);
    dump_.emplace_back([name, &var](json& j) { j[key(name)] = var; });
    return opt;
  }
  void resolved(json& j) const {
    for (const auto& d : dump_) d(j);
  }
  CLI::App* app() const { return app_; }

 private:
  static std::string key(std::string name) {
    std::replace(name.begin(), name.end(), '-', '_');
    return name;
  }
  CLI::App* app_;
  std::vector<std::function<void(json&)>> dump_;
};

int resolved_threads(const Globals& g) {
  if (g.threads == "auto") return omp_get_max_threads();
  int n = 0;
  try {
    n = std::stoi(g.threads);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--threads", "expected a positive count or \"auto\"");
  }
  if (n < 1) throw CLI::ValidationError("--threads", "expected a positive count or \"auto\"");
  return n;
}

void require_budget(double work, const Globals& g, const std::string& what) {
  if (work > static_cast<double>(g.budget)) {
    throw ResourceError(what + " needs " + fmt(work) + " operations, over the budget " +
                        std::to_string(g.budget));
  }
}

std::vector<cplx> unimodular_or_ones(const std::string& mode, std::size_t n, std::uint64_t seed) {
  if (mode == "ones") return std::vector<cplx>(n, 1.0);
  if (mode != "random") throw DomainError("coefficient mode must be \"ones\" or \"random\"");
  CounterRng rng(seed);
  std::vector<cplx> v(n);
  for (cplx& z : v) z = rng.unimodular();
  return v;
}

QuintConfig quint_config(u64 q, u64 a, u64 H, u64 K, u64 M, u64 N, const std::string& mode,
                         std::uint64_t seed) {
  const PrimeModulus p(q);
  if (mode == "random") return QuintConfig::with_random_coefficients(p, a, H, K, M, N, seed);
  if (mode == "ones") return QuintConfig::with_unit_coefficients(p, a, H, K, M, N);
  throw DomainError("--beta must be \"ones\" or \"random\"");
}

std::vector<u64> parse_list(const std::string& text) {
  std::vector<u64> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw DomainError("not a list of integers: '" + text + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- commands

using Handler = std::function<Report(const Globals&)>;

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Params> params;
  Handler handler;
};

// Each register_* binds flags to captured state owned by the closure.

Command cmd_kl(CLI::App& root) {
  auto* app = root.add_subcommand("kl", "Normalised Kloosterman sum Kl(z, q) = S(z, 1; q)/sqrt(q)");
  auto p = std::make_unique<Params>(app);
  auto st = std::make_shared<std::tuple<u64, i64>>(0, 1);
  p->add("q", std::get<0>(*st), "prime modulus")->required();
  p->add("z", std::get<1>(*st), "argument");
  return {app, std::move(p), [st](const Globals&) {
            const auto [q, z] = *st;
            const PrimeModulus p(q);
            const double S = kloosterman_direct(z, 1, p);
            Report r;
            r.results["Kl"] = S / p.sqrt_q();
            r.results["S"] = S;
            r.bounds["weil"] = 2.0;
            r.ratios["abs_Kl_over_2"] = std::abs(S / p.sqrt_q()) / 2.0;
            r.table = Table({"q", "z", "kl", "s"});
            r.table->row(q, z, S / p.sqrt_q(), S);
            return r;
          }};
}

Command cmd_table(CLI::App& root) {
  auto* app = root.add_subcommand("table", "Tabulate Kl(a, q) for all a by the Rader convolution");
  auto p = std::make_unique<Params>(app);
  struct S {
    u64 q = 0;
    std::string binary;
    bool verify = false;
  };
  auto st = std::make_shared<S>();
  p->add("q", st->q, "prime modulus")->required();
  p->add("binary", st->binary, "also write the binary table to this path");
  p->flag("verify", st->verify, "compare every entry with direct O(q) evaluation");
  return {app, std::move(p), [st](const Globals& g) {
            require_budget(static_cast<double>(st->q), g, "table");
            const PrimeModulus q(st->q);
            const KloostermanTable t = build_table(q);
            Report r;
            double second = 0.0, max_abs = 0.0;
            for (double v : t.values()) {
              second += v * v;
              max_abs = std::max(max_abs, std::abs(v));
            }
            r.results["sum_kl_squared"] = second;
            r.results["max_abs_kl"] = max_abs;
            r.bounds["sum_kl_squared_expected"] = static_cast<double>(st->q - 1);
            r.bounds["weil"] = 2.0;
            r.ratios["max_abs_kl_over_2"] = max_abs / 2.0;
            if (st->verify) {
              require_budget(static_cast<double>(st->q) * static_cast<double>(st->q), g, "table --verify");
              const KloostermanEvaluator ev(q);
              double worst = 0.0;
              for (u64 a = 0; a < st->q; ++a) {
                worst = std::max(worst, std::abs(t[a] - ev.normalized(static_cast<i64>(a))));
              }
              r.results["max_error_vs_direct"] = worst;
            }
            if (!st->binary.empty()) {
              t.save_binary(st->binary);
              r.results["binary"] = st->binary;
            }
            r.table = Table({"a", "kl"});
            for (u64 a = 0; a < st->q; ++a) r.table->row(a, t[a]);
            return r;
          }};
}

Command cmd_weil(CLI::App& root) {
  auto* app = root.add_subcommand("weil", "Sample |S(m,n;q)|/(2 sqrt q) at seeded (m,n)");
  auto p = std::make_unique<Params>(app);
  auto st = std::make_shared<std::pair<u64, u64>>(0, 1000);
  p->add("q", st->first, "prime modulus")->required();
  p->add("trials", st->second, "number of sampled pairs");
  return {app, std::move(p), [st](const Globals& g) {
            require_budget(static_cast<double>(st->first) * static_cast<double>(st->second), g, "weil");
            const WeilReport w = weil_check(PrimeModulus(st->first), st->second, g.seed);
            Report r;
            r.results["trials"] = w.trials;
            r.results["max_ratio"] = w.max_ratio;
            r.results["argmax_m"] = w.argmax_m;
            r.results["argmax_n"] = w.argmax_n;
            r.results["within_bound"] = w.within_bound;
            r.bounds["weil"] = "2 sqrt(q)";
            r.ratios["max_abs_S_over_weil"] = w.max_ratio;
            return r;
          }};
}

Command cmd_pi_ap(CLI::App& root) {
  auto* app = root.add_subcommand("pi-ap", "Exact pi(x; q, a) by segmented sieve");
  auto p = std::make_unique<Params>(app);
  auto st = std::make_shared<APCountConfig>(APCountConfig{0.0, 1, 1, {}});
  p->add("x", st->x, "limit")->required();
  p->add("q", st->q, "modulus (1 counts all primes)");
  p->add("a", st->a, "residue class");
  return {app, std::move(p), [st](const Globals& g) {
            SieveOptions opts;
            opts.threads = resolved_threads(g);
            const u64 c = pi_ap(*st, opts);
            Report r;
            r.derived["limit"] = st->limit();
            r.results["count"] = c;
            r.table = Table({"x", "q", "a", "count"});
            r.table->row(st->limit(), st->q, st->a, c);
            return r;
          }};
}

Command cmd_bt_scan(CLI::App& root) {
  auto* app = root.add_subcommand("bt-scan", "max over a of pi(x;q,a) phi(q) log x / x, one sieve pass");
  auto p = std::make_unique<Params>(app);
  auto st = std::make_shared<std::pair<double, u64>>(0.0, 0);
  p->add("x", st->first, "limit")->required();
  p->add("q", st->second, "prime modulus below x")->required();
  return {app, std::move(p), [st](const Globals& g) {
            SieveOptions opts;
            opts.threads = resolved_threads(g);
            const PrimeModulus q(st->second);
            const BTScan s = bt_ratio_scan(st->first, q, opts);
            Report r;
            const double varpi = std::log(static_cast<double>(s.q)) / s.log_x;
            r.derived["limit"] = s.x;
            r.derived["log_x"] = s.log_x;
            r.derived["varpi"] = varpi;
            r.results["max_ratio"] = s.max_ratio;
            r.results["argmax"] = s.argmax;
            r.results["pi_x"] = s.total_primes;
            const double c = to_double(c_new(8, Rational(1, 2)).C);
            r.bounds["C_new_8_half"] = "480/151";
            r.bounds["C_iwaniec_varpi"] = 7.0 * varpi < 6.0 ? c_iwaniec(varpi) : NAN;
            r.ratios["max_ratio_over_C_new_8_half"] = s.max_ratio / c;
            r.table = Table({"a", "count", "ratio"});
            for (u64 a = 1; a < s.q; ++a) r.table->row(a, s.counts[a], s.ratio(a));
            return r;
          }};
}

Command cmd_poisson(CLI::App& root) {
  auto* app = root.add_subcommand("poisson-check", "r(d) against its Poisson-truncated form for d <= d-max");
  auto p = std::make_unique<Params>(app);
  struct S {
    double x = 1e4;
    u64 q = 101, a = 1, d_max = 20;
    double eps = 0.1;
    double mn = 0.0;
    u64 h = 0;
  };
  auto st = std::make_shared<S>();
  p->add("x", st->x, "scale of the smooth weight");
  p->add("q", st->q, "prime modulus");
  p->add("a", st->a, "residue class");
  p->add("d-max", st->d_max, "largest d");
  p->add("eps", st->eps, "eps in H = x^{eps-1} MN q");
  p->add("mn", st->mn, "level MN (0: floor(x^{1-eps}))");
  p->add("h-cutoff", st->h, "explicit cutoff H (0: from the rule)");
  return {app, std::move(p), [st](const Globals&) {
            const PrimeModulus q(st->q);
            const SmoothWeight w = SmoothWeight::for_scale(st->x);
            const double MN = st->mn > 0.0 ? st->mn : std::floor(std::pow(st->x, 1.0 - st->eps));
            const double Hreal = poisson_cutoff(st->x, st->eps, MN, static_cast<double>(q.value()));
            const u64 H = st->h > 0 ? st->h : static_cast<u64>(std::floor(Hreal));
            Report r;
            r.derived["y"] = w.y();
            r.derived["mass"] = w.mass();
            r.derived["MN"] = MN;
            r.derived["H_rule"] = Hreal;
            r.derived["H"] = H;
            r.table = Table({"d", "a_weighted", "remainder", "truncated", "difference", "tolerance",
                             "ratio", "imag_over_scale"});
            double worst = 0.0, worst_imag = 0.0;
            u64 worst_d = 0;
            for (u64 d = 1; d <= st->d_max; ++d) {
              if (std::gcd(d, st->q) != 1) continue;
              const APCountConfig cfg{st->x, st->q, st->a, d};
              const double A = a_weighted(d, cfg, w);
              const double rem = remainder(d, cfg, w);
              const TruncatedRemainder tr = remainder_truncated(d, cfg, w, H);
              const double diff = std::abs(rem - tr.value);
              const double tol = 1e-4 * st->x / (static_cast<double>(d) * static_cast<double>(st->q));
              const double imag = tr.scale > 0.0 ? std::abs(tr.imag) / tr.scale : 0.0;
              r.table->row(d, A, rem, tr.value, diff, tol, diff / tol, imag);
              if (diff / tol > worst) {
                worst = diff / tol;
                worst_d = d;
              }
              worst_imag = std::max(worst_imag, imag);
            }
            r.results["worst_ratio"] = worst;
            r.results["worst_d"] = worst_d;
            r.results["max_imag_over_scale"] = worst_imag;
            r.bounds["difference"] = "1e-4 x/(dq)";
            r.ratios["worst_difference_over_tolerance"] = worst;
            return r;
          }};
}

Command cmd_quint(CLI::App& root) {
  auto* app = root.add_subcommand("quint", "Sharp quintilinear Kloosterman sum");
  auto p = std::make_unique<Params>(app);
  struct S {
    u64 q = 101, a = 1, H = 3, K = 2, M = 4, N = 3;
    std::string beta = "random";
  };
  auto st = std::make_shared<S>();
  p->add("q", st->q, "prime modulus");
  p->add("a", st->a, "residue");
  p->add("H", st->H, "h in [1, H]");
  p->add("K", st->K, "k in [1, K]");
  p->add("M", st->M, "m in (M, 2M] (alpha length)");
  p->add("N", st->N, "n in (N, 2N]");
  p->add("beta", st->beta, "coefficients: random or ones");
  return {app, std::move(p), [st](const Globals& g) {
            const double work = static_cast<double>(st->K) * st->H * st->H * st->N * st->N;
            require_budget(work, g, "quint");
            const QuintConfig cfg = quint_config(st->q, st->a, st->H, st->K, st->M, st->N, st->beta, g.seed);
            const KloostermanTable t = build_table(cfg.q);
            const cplx v = quint_sum_sharp(cfg, t);
            const double trivial = 2.0 * cfg.q.sqrt_q() * work;
            Report r;
            r.results["value"] = complex_json(v);
            r.bounds["weil_trivial"] = trivial;
            r.ratios["abs_over_weil_trivial"] = std::abs(v) / trivial;
            r.table = Table({"q", "H", "K", "N", "re", "im"});
            r.table->row(st->q, st->H, st->K, st->N, v.real(), v.imag());
            return r;
          }};
}

Command cmd_sigma(CLI::App& root) {
  auto* app = root.add_subcommand("sigma", "Smoothed Sigma after Cauchy-Schwarz and Poisson in m");
  auto p = std::make_unique<Params>(app);
  struct S {
    u64 q = 101, a = 1, H = 2, M = 20, N = 2, K = 0;
    double x = 1e4, eps = 0.1;
    std::string beta = "random";
  };
  auto st = std::make_shared<S>();
  p->add("q", st->q, "prime modulus");
  p->add("a", st->a, "residue");
  p->add("H", st->H, "h in [1, H]");
  p->add("M", st->M, "m ~ M");
  p->add("N", st->N, "n in (N, 2N]");
  p->add("K", st->K, "explicit k-cutoff (0: floor(q^{1+eps}/M))");
  p->add("x", st->x, "scale of the smooth weight");
  p->add("eps", st->eps, "eps");
  p->add("beta", st->beta, "coefficients: random or ones");
  return {app, std::move(p), [st](const Globals& g) {
            const double work = static_cast<double>(st->H * st->H) * st->N * st->N *
                                std::max<double>(1.0, static_cast<double>(st->K)) * 2.0;
            require_budget(work, g, "sigma");
            QuintConfig cfg = quint_config(st->q, st->a, st->H, 1, st->M, st->N, st->beta, g.seed);
            const KloostermanTable t = build_table(cfg.q);
            const SmoothWeight w = SmoothWeight::for_scale(st->x);
            const PlateauBump W = PlateauBump::unit_majorant();
            const SigmaResult s = st->K > 0 ? sigma_fixed_k(cfg, w, W, t, st->K)
                                            : sigma_weighted(cfg, w, W, t, st->eps);
            const double ms = mean_square_direct(cfg, w, W);
            const double R2 = std::norm(r_bilinear(cfg, w));
            Report r;
            r.derived["K"] = s.K;
            r.derived["y"] = w.y();
            r.results["sigma"] = s.sigma;
            r.results["sigma_imag"] = s.sigma_imag;
            r.results["k0_term"] = complex_json(s.k0_term);
            r.results["sigma_plus_k0"] = s.sigma + s.k0_term.real();
            r.results["mean_square_direct"] = ms;
            r.results["R_squared"] = R2;
            r.bounds["k0_bound"] = s.k0_bound;
            r.bounds["error_formula"] = s.error_formula;
            r.ratios["R_squared_over_mean_square"] = ms > 0.0 ? R2 / ms : 0.0;
            r.ratios["k0_term_over_k0_bound"] = s.k0_bound > 0.0 ? std::abs(s.k0_term) / s.k0_bound : 0.0;
            r.ratios["tail_over_mean_square"] =
                ms > 0.0 ? std::abs(ms - s.sigma - s.k0_term.real()) / ms : 0.0;
            return r;
          }};
}

Command cmd_shift(CLI::App& root) {
  auto* app = root.add_subcommand("shift-check", "Exactness of the (h1,h2) -> (h1+rs1, h2+rs2) reindexing");
  auto p = std::make_unique<Params>(app);
  struct S {
    u64 q = 101, a = 1, H = 8, M = 4, N = 3, K = 2, R = 1, shifts = 20;
    double x = 1e4;
    std::string beta = "random";
  };
  auto st = std::make_shared<S>();
  p->add("q", st->q, "prime modulus");
  p->add("a", st->a, "residue");
  p->add("H", st->H, "tent cutoff");
  p->add("M", st->M, "m ~ M");
  p->add("N", st->N, "n in (N, 2N]");
  p->add("K", st->K, "1 <= |k| <= K");
  p->add("R", st->R, "r ~ R (S = H/(4R))");
  p->add("shifts", st->shifts, "number of seeded shifts");
  p->add("x", st->x, "scale of the smooth weight");
  p->add("beta", st->beta, "coefficients: random or ones");
  return {app, std::move(p), [st](const Globals& g) {
            const QuintConfig cfg = quint_config(st->q, st->a, st->H, st->K, st->M, st->N, st->beta, g.seed);
            const ShiftConfig sh = ShiftConfig::sampled(st->H, st->R, st->shifts, g.seed + 1);
            const KloostermanTable t = build_table(cfg.q);
            const ShiftCheckReport rep =
                shift_identity_check(cfg, sh, SmoothWeight::for_scale(st->x), PlateauBump::unit_majorant(), t);
            Report r;
            r.derived["S"] = sh.S;
            r.results["sigma_phi"] = rep.sigma_phi;
            r.results["sigma_sharp"] = rep.sigma_sharp;
            r.results["max_discrepancy"] = rep.max_discrepancy;
            r.results["max_relative"] = rep.max_relative;
            r.bounds["relative"] = 1e-9;
            r.ratios["max_relative_over_bound"] = rep.max_relative / 1e-9;
            r.table = Table({"i", "r", "s1", "s2", "discrepancy"});
            for (std::size_t i = 0; i < sh.shifts.size(); ++i) {
              const Shift& s = sh.shifts[i];
              r.table->row(i, s.r, s.s1, s.s2, rep.discrepancies[i]);
            }
            return r;
          }};
}

Command cmd_rho(CLI::App& root) {
  auto* app = root.add_subcommand("rho", "Census of rho(b,c), Sigma1, Sigma2 and the Holder step");
  auto p = std::make_unique<Params>(app);
  struct S {
    u64 q = 101, a = 1, H = 3, N = 2, S = 3, K = 2, R = 2;
    unsigned nu = 2;
    std::string theta = "ones";
  };
  auto st = std::make_shared<S>();
  p->add("q", st->q, "prime modulus");
  p->add("a", st->a, "residue");
  p->add("H", st->H, "|h| <= 2H");
  p->add("N", st->N, "n in (N, 2N]");
  p->add("S", st->S, "s in (S, 2S]");
  p->add("K", st->K, "1 <= |k| <= K");
  p->add("R", st->R, "r in (R, 2R] for the Holder step");
  p->add("nu", st->nu, "Holder exponent");
  p->add("theta", st->theta, "theta_r: ones or random");
  return {app, std::move(p), [st](const Globals& g) {
            RhoConfig cfg{PrimeModulus(st->q), st->a, st->H, st->N, st->S, st->K, g.budget};
            const RhoCensus c = rho_census(cfg);
            const KloostermanTable t = build_table(cfg.q);
            const std::vector<cplx> theta = unimodular_or_ones(st->theta, st->R, g.seed);
            const HolderCheck h = holder_check(c, t, st->R, theta, st->nu);
            Report r;
            r.derived["tuple_count"] = cfg.tuple_count();
            r.derived["T1"] = c.report.T1;
            r.derived["T2"] = c.report.T2;
            r.results["enumerated"] = c.enumerated;
            r.results["admitted"] = c.admitted;
            r.results["sigma1"] = c.sigma1;
            r.results["sigma2"] = c.sigma2;
            r.results["rho_support"] = c.report.rho_support;
            r.results["holder_lhs"] = h.lhs;
            r.results["holder_rhs"] = h.rhs;
            r.results["holder_holds"] = h.holds;
            r.results["sigma3"] = h.sigma3;
            r.bounds["sigma1_trivial"] = c.report.bound1;
            r.bounds["sigma2"] = c.report.bound2;
            r.bounds["sigma3"] = h.bound3;
            r.ratios["sigma1"] = c.report.ratio1;
            r.ratios["sigma2"] = c.report.ratio2;
            r.ratios["sigma3"] = h.sigma3 / h.bound3;
            r.table = Table({"b", "c", "rho"});
            const u64 q = st->q;
            for (u64 b = 0; b < q; ++b) {
              for (u64 cc = 1; cc < q; ++cc) {
                if (const auto v = c.rho(b, cc)) r.table->row(b, cc, v);
              }
            }
            return r;
          }};
}

Command cmd_moments(CLI::App& root) {
  auto* app = root.add_subcommand("moments", "Sigma3 = sum_{b,c} |sum_m alpha_m Kl(b+mc)|^{2nu} over M and q series");
  auto p = std::make_unique<Params>(app);
  struct S {
    std::string qs = "101";
    u64 M = 5, M_to = 0;
    unsigned nu = 1;
    std::string alpha = "ones";
  };
  auto st = std::make_shared<S>();
  p->add("q", st->qs, "prime modulus, or a comma-separated list");
  p->add("M", st->M, "m in [1, M] (first M of a series)");
  p->add("M-to", st->M_to, "last M of a series (0: just M)");
  p->add("nu", st->nu, "moment exponent");
  p->add("alpha", st->alpha, "coefficients: ones or random");
  return {app, std::move(p), [st](const Globals& g) {
            const int threads = resolved_threads(g);
            const u64 last = std::max(st->M, st->M_to);
            Report r;
            r.table = Table({"q", "M", "nu", "value", "bound", "ratio"});
            double worst = 0.0;
            json series = json::array();
            for (u64 qv : parse_list(st->qs)) {
              const PrimeModulus q(qv);
              const KloostermanTable t = build_table(q);
              for (u64 M = st->M; M <= last; ++M) {
                const std::vector<cplx> alpha = unimodular_or_ones(st->alpha, M, g.seed);
                const MomentValue v = sigma3_moment(t, M, st->nu, alpha, g.budget, threads);
                r.table->row(qv, M, st->nu, v.value, v.bound, v.ratio);
                series.push_back(json{{"q", qv}, {"M", M}, {"value", v.value}, {"bound", v.bound}, {"ratio", v.ratio}});
                worst = std::max(worst, v.ratio);
              }
            }
            r.results["series"] = series;
            r.bounds["formula"] = "q^2 M^nu + q M^{2nu}";
            r.ratios["max_ratio"] = worst;
            return r;
          }};
}

Command cmd_strata(CLI::App& root) {
  auto* app = root.add_subcommand("strata", "Classify m in [1,M]^{2nu} by |A(m)| into V-like, W-like, generic");
  auto p = std::make_unique<Params>(app);
  struct S {
    u64 q = 101, M = 5;
    unsigned nu = 1;
    double c1 = 10.0, c2 = 1.0;
  };
  auto st = std::make_shared<S>();
  p->add("q", st->q, "prime modulus");
  p->add("M", st->M, "m_j in [1, M]");
  p->add("nu", st->nu, "tuples of length 2 nu");
  p->add("c1", st->c1, "W-like above c1 q");
  p->add("c2", st->c2, "V-like above c2 q^{3/2}");
  return {app, std::move(p), [st](const Globals& g) {
            const PrimeModulus q(st->q);
            const KloostermanTable t = build_table(q);
            const StrataCensus s = strata_census(t, st->M, st->nu, {st->c1, st->c2}, g.budget);
            Report r;
            r.results["total"] = s.total;
            r.results["v_like"] = s.v_like;
            r.results["w_like"] = s.w_like;
            r.results["generic"] = s.generic;
            r.results["max_generic"] = s.max_generic;
            r.results["distinct_evaluations"] = s.distinct_evaluations;
            r.ratios["v_over_M_nu"] = s.v_ratio;
            r.ratios["w_over_M_3nu_2"] = s.w_ratio;
            r.table = Table({"stratum", "count", "normalised"});
            r.table->row("V", s.v_like, s.v_ratio);
            r.table->row("W", s.w_like, s.w_ratio);
            r.table->row("generic", s.generic, static_cast<double>(s.generic) / static_cast<double>(std::max<u64>(1, s.total)));
            return r;
          }};
}

json plan_json(const ExponentPlan& e) {
  return json{{"nu", e.nu},
              {"varpi", to_string(e.varpi)},
              {"delta", to_string(e.delta)},
              {"delta_value", e.delta_value()},
              {"C", to_string(e.C)},
              {"C_value", e.C_value()},
              {"range_hi", to_string(e.range_hi)}};
}

Command cmd_bounds(CLI::App& root) {
  auto* app = root.add_subcommand("bounds", "Exact constants C_new(nu, varpi) and C_iwaniec(varpi)");
  auto p = std::make_unique<Params>(app);
  struct S {
    std::string varpi = "1/2";
    int nu = 8;
    bool curve = false;
    u64 points = 100;
  };
  auto st = std::make_shared<S>();
  p->add("varpi", st->varpi, "log q / log x, exact (p/q or decimal)");
  p->add("nu", st->nu, "nu >= 5");
  p->flag("curve", st->curve, "CSV/series of (varpi, C_iwaniec, C_new at the optimal nu) on [1/2, range_hi)");
  p->add("points", st->points, "curve points");
  return {app, std::move(p), [st](const Globals&) {
            const Rational varpi = parse_rational(st->varpi);
            const ExponentPlan e = c_new(st->nu, varpi);
            const IwaniecValue iw = c_iwaniec(varpi);
            const AffineDenominator den = c_new_denominator(st->nu);
            Report r;
            r.derived["varpi"] = to_string(varpi);
            r.derived["range_hi"] = to_string(e.range_hi);
            r.derived["denominator"] = json{{"constant", to_string(den.constant)}, {"slope", to_string(den.slope)}};
            r.results["C"] = to_string(e.C);
            r.results["C_value"] = e.C_value();
            r.results["delta"] = to_string(e.delta);
            r.results["delta_value"] = e.delta_value();
            r.bounds["C_iwaniec"] = to_string(iw.value);
            r.bounds["C_iwaniec_value"] = to_double(iw.value);
            r.bounds["C_iwaniec_in_validity_range"] = iw.in_validity_range;
            r.ratios["C_over_C_iwaniec"] = e.C_value() / to_double(iw.value);
            if (st->curve) {
              r.table = Table({"varpi", "c_iwaniec", "nu", "c_new"});
              const u64 n = std::max<u64>(st->points, 1);
              for (u64 i = 0; i < n; ++i) {
                // Grid points as exact rationals so the optimizer stays exact.
                const Rational v = Rational(1, 2) + Rational(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n)) *
                                                        (range_hi(8) - Rational(1, 2));
                const NuOptimum o = optimize_nu(v);
                const double cn = o.feasible ? o.plan->C_value() : NAN;
                r.table->row(to_double(v), to_double(c_iwaniec(v).value), o.nu, cn);
              }
            }
            r.results["plan"] = plan_json(e);
            return r;
          }};
}

Command cmd_optimize(CLI::App& root) {
  auto* app = root.add_subcommand("optimize", "The nu minimising C_new(nu, varpi)");
  auto p = std::make_unique<Params>(app);
  auto st = std::make_shared<std::pair<std::string, int>>("1/2", 200);
  p->add("varpi", st->first, "log q / log x, exact");
  p->add("nu-max", st->second, "search nu in [5, nu-max]");
  return {app, std::move(p), [st](const Globals&) {
            const NuOptimum o = optimize_nu(parse_rational(st->first), st->second);
            Report r;
            r.results["feasible"] = o.feasible;
            if (o.feasible) {
              r.results["nu"] = o.nu;
              r.results["C"] = to_string(o.plan->C);
              r.results["C_value"] = o.plan->C_value();
              r.results["plan"] = plan_json(*o.plan);
            } else {
              r.results["reason"] = o.reason;
            }
            return r;
          }};
}

Command cmd_plan(CLI::App& root) {
  auto* app = root.add_subcommand("plan", "Parameter plan M, N, D, H, K, R, S with constraint flags");
  auto p = std::make_unique<Params>(app);
  struct S {
    double x = 1e8;
    u64 q = 10007;
    int nu = 8;
    double eps = 0.01, eps_prime = 0.01;
    bool strict = false;
  };
  auto st = std::make_shared<S>();
  p->add("x", st->x, "scale");
  p->add("q", st->q, "prime modulus");
  p->add("nu", st->nu, "nu >= 5");
  p->add("eps", st->eps, "eps");
  p->add("eps-prime", st->eps_prime, "eps'");
  p->flag("strict", st->strict, "treat any constraint violation as a domain error");
  return {app, std::move(p), [st](const Globals&) {
            const ParameterPlan pl = st->strict ? parameter_plan(st->x, st->q, st->nu, st->eps, st->eps_prime)
                                                : plan_parameters(st->x, st->q, st->nu, st->eps, st->eps_prime);
            Report r;
            r.derived["varpi"] = pl.varpi;
            r.derived["varpi_in_range"] = pl.varpi_in_range;
            r.derived["degenerate"] = pl.degenerate;
            r.results["M"] = pl.M;
            r.results["N"] = pl.N;
            r.results["N_branch"] = pl.N_branch;
            r.results["N_simplified"] = pl.N_simplified;
            r.results["N_first"] = pl.N_first;
            r.results["D"] = pl.D;
            r.results["D_closed"] = pl.D_closed;
            r.results["D_over_x"] = pl.D / pl.x;
            r.results["H"] = pl.H;
            r.results["K"] = pl.K;
            r.results["R"] = pl.R;
            r.results["S"] = pl.S;
            r.results["violations"] = pl.violations;
            r.results["ok"] = pl.ok();
            r.bounds["H_min"] = 4.0 * pl.R;
            r.bounds["K_max"] = pl.q / 2.0;
            r.ratios["D_relative_gap"] = pl.D_relative_gap;
            return r;
          }};
}

// ---------------------------------------------------------------- config file

std::string config_token(const std::string& key) {
  std::string k = key;
  std::replace(k.begin(), k.end(), '_', '-');
  return "--" + k;
}

std::vector<std::string> config_tokens(const json& obj) {
  std::vector<std::string> out;
  for (const auto& [key, value] : obj.items()) {
    if (key == "command") continue;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(config_token(key));
      continue;
    }
    out.push_back(config_token(key));
    if (value.is_string()) {
      out.push_back(value.get<std::string>());
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      out.push_back(value.dump());
    } else if (value.is_number_float()) {
      const double v = value.get<double>();
      out.push_back(v == std::floor(v) && std::abs(v) < 9e15 ? std::to_string(static_cast<long long>(v)) : fmt(v));
    } else {
      throw CLI::ValidationError(key, "config values must be scalars");
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& subcommands() { return kSubcommands; }

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"btw: Brun-Titchmarsh workbench (Kloosterman sums, sieves, moments, constants)", "btw"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Globals g;
  std::string config_path;
  auto global = [&](CLI::Option* o) { return o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast); };
  global(app.add_option("--seed", g.seed, "seed of btw-splitmix64-ctr/1")->capture_default_str());
  global(app.add_option("--threads", g.threads, "OpenMP threads, or auto")->capture_default_str());
  global(app.add_option("--budget", g.budget, "maximum enumeration size")->capture_default_str());
  global(app.add_option("--out", g.out, "write the report here instead of stdout"));
  global(app.add_option("--format", g.format, "json or csv")
             ->check(CLI::IsMember({"json", "csv"}))
             ->capture_default_str());
  app.add_option("--config", config_path, "JSON file of flag values");

  std::vector<Command> commands;
  for (auto* make : {cmd_kl, cmd_table, cmd_weil, cmd_pi_ap, cmd_bt_scan, cmd_poisson, cmd_quint, cmd_sigma,
                     cmd_shift, cmd_rho, cmd_moments, cmd_strata, cmd_bounds, cmd_optimize, cmd_plan}) {
    commands.push_back(make(app));
  }

  // --config is applied by splicing its values in right after the subcommand
  // name and before the user's own flags, so TakeLast lets the user win.
  std::vector<std::string> args = args_in;
  std::string command_name;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        continue;
      }
      std::ifstream in(path);
      if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
      }
      if (!file.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");
      const json& obj = file.contains("config") && file["config"].is_object() ? file["config"] : file;
      std::string from_file = file.value("command", obj.value("command", std::string{}));
      auto sub_at = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
      });
      if (sub_at == args.end()) {
        if (from_file.empty()) break;
        args.insert(args.begin(), from_file);
        sub_at = args.begin();
      }
      std::vector<std::string> spliced{*sub_at};
      const std::vector<std::string> tokens = config_tokens(obj);
      spliced.insert(spliced.end(), tokens.begin(), tokens.end());
      args.erase(sub_at);
      spliced.insert(spliced.end(), args.begin(), args.end());
      args = std::move(spliced);
      break;
    }
  } catch (const CLI::Error& e) {
    err << "btw: " << e.what() << '\n';
    return kExitConfig;
  }

  const bool wants_help = std::any_of(args.begin(), args.end(), [](const std::string& a) {
    return a == "-h" || a == "--help" || a == "--version";
  });
  const auto sub_at = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
  });
  if (sub_at == args.end() && !wants_help) {
    const auto stray = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
    if (stray != args.end()) err << "btw: unknown subcommand '" << *stray << "'\n";
    err << app.help();
    return kExitUsage;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Help requested on a subcommand surfaces here too.
    if (e.get_exit_code() == 0) {
      for (const auto& c : commands) {
        if (c.app->parsed()) {
          out << c.app->help();
          return kExitOk;
        }
      }
      out << app.help();
      return kExitOk;
    }
    err << "btw: " << e.what() << '\n';
    return kExitConfig;
  }

  const Command* cmd = nullptr;
  for (const auto& c : commands) {
    if (c.app->parsed()) cmd = &c;
  }
  if (cmd == nullptr) {
    err << app.help();
    return kExitUsage;
  }
  command_name = cmd->app->get_name();

  try {
    const int threads = resolved_threads(g);
    omp_set_num_threads(threads);

    json report;
    report["command"] = command_name;
    report["version"] = kVersion;
    report["rng"] = std::string(CounterRng::kName);
    json config;
    config["seed"] = g.seed;
    config["threads"] = g.threads;
    config["budget"] = g.budget;
    config["format"] = g.format;
    cmd->params->resolved(config);
    report["config"] = config;

    const auto start = std::chrono::steady_clock::now();
    Report r = cmd->handler(g);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    r.derived["threads"] = threads;
    report["derived"] = r.derived;
    report["results"] = r.results;
    report["bounds"] = r.bounds;
    report["ratios"] = r.ratios;
    report["wall_time_s"] = wall;

    std::ofstream file;
    if (!g.out.empty()) {
      file.open(g.out, std::ios::binary);
      if (!file) throw CLI::ValidationError("--out", "cannot write " + g.out);
    }
    std::ostream& sink = g.out.empty() ? out : file;
    if (g.format == "csv") {
      if (r.table) {
        r.table->write(sink);
      } else {
        Table t({"key", "value"});
        flatten(r.results, "", t);
        t.write(sink);
      }
    } else {
      sink << report.dump(2) << '\n';
    }
    return kExitOk;
  } catch (const DomainError& e) {
    err << "btw " << command_name << ": domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const ResourceError& e) {
    err << "btw " << command_name << ": resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const NumericalError& e) {
    err << "btw " << command_name << ": numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CLI::Error& e) {
    err << "btw " << command_name << ": " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace btw::cli
