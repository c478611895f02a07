// zml: command-line front end.
//
//   zml scheme     --T 1e5 --threshold 0.8
//   zml eval       --t 14.134725 --t 1000
//   zml moments    --T 1e4 --k 1 --h 0 --target zeta
//   zml inequality --k 1.5 --samples 1000 --variant full
//   zml twisted    --T 1e4 --poly 1:1,2:1 --lemma 1 --direct
//   zml selftest   --seed 7 --workers 4
//
// Options may also come from an INI/TOML file given with --config; command
// line flags take precedence.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>

#include "selftest.hpp"
#include "zml/critline.hpp"
#include "zml/dirpoly.hpp"
#include "zml/errors.hpp"
#include "zml/inequality.hpp"
#include "zml/moments.hpp"
#include "zml/primes.hpp"
#include "zml/rng.hpp"
#include "zml/twisted.hpp"

namespace {

using namespace zml;

struct Common {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output;
  std::string cache_dir;
  int rs_terms = 8;

  Parallel par() const { return {workers}; }
  EvalAccuracy accuracy() const {
    EvalAccuracy acc;
    acc.rs_correction_terms = rs_terms;
    return acc;
  }
};

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) fail(ErrorKind::config, fmt::format("cannot open output '{}'", path));
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

PrimeTable primes_for(double limit) {
  return sieve_primes(static_cast<std::uint64_t>(std::max(100.0, std::ceil(limit)) + 1));
}

IncrementScheme make_scheme(double T, double threshold, const std::vector<double>& boundaries) {
  if (!boundaries.empty()) return custom_scheme(T, boundaries, primes_for(boundaries.back()));
  const double limit = scheme_prime_limit(std::log(T), threshold);
  return build_scheme(T, threshold, primes_for(limit));
}

// "n:re[:im],n:re[:im],..."
DirichletPoly parse_poly(const std::string& text) {
  std::vector<std::pair<std::uint64_t, cplx>> terms;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream is(item);
    std::string n, re, im = "0";
    if (!std::getline(is, n, ':') || !std::getline(is, re, ':'))
      fail(ErrorKind::config, fmt::format("bad polynomial term '{}' (expected n:re[:im])", item));
    std::getline(is, im, ':');
    try {
      terms.emplace_back(std::stoull(n), cplx(std::stod(re), std::stod(im)));
    } catch (const std::exception&) {
      fail(ErrorKind::config, fmt::format("bad polynomial term '{}'", item));
    }
  }
  if (terms.empty()) fail(ErrorKind::config, "empty polynomial");
  return DirichletPoly::from_terms(terms);
}

int run_scheme(const Common& c, double T, double threshold, const std::vector<double>& boundaries) {
  const auto s = make_scheme(T, threshold, boundaries);
  Sink out(c.output);
  write_scheme_csv(out.os(), s);
  return 0;
}

int run_eval(const Common& c, std::vector<double> ts, double from, double to, double step) {
  if (step > 0.0) {
    if (!(to >= from)) fail(ErrorKind::config, "--to must not be below --from");
    const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) ts.push_back(from + static_cast<double>(i) * step);
  }
  if (ts.empty()) fail(ErrorKind::config, "eval needs --t or --from/--to/--step");
  const auto acc = c.accuracy();
  std::vector<CriticalPointSample> out(ts.size());
  for_each_block(ts.size(), c.par(), [&](std::size_t i) { out[i] = critical_sample(ts[i], acc); });
  Sink sink(c.output);
  auto& os = sink.os();
  os << "t,Z,Z_prime,theta,theta_prime,abs_zeta,abs_zeta_prime_sq,est_abs_error,path\n";
  for (const auto& s : out)
    fmt::print(os, "{},{},{},{},{},{},{},{},{}\n", s.t, s.Z, s.Z_prime, s.theta, s.theta_prime, s.abs_zeta(),
               s.abs_zeta_prime_sq(), s.est_abs_error, s.oracle_path ? "em" : "rs");
  return 0;
}

int run_moments(const Common& c, const std::vector<double>& Ts, const std::vector<double>& ks,
                const std::vector<double>& hs, const std::string& target, int ppg, bool scaling) {
  const Target tg = parse_target(target);
  std::vector<MomentEstimate> rows;
  for (double T : Ts) {
    const auto grid = sample_moment_grid(T, ppg, c.accuracy(), c.par(), c.cache_dir);
    for (double k : ks)
      for (double h : hs) rows.push_back(joint_moment(grid, k, h, tg));
  }
  Sink sink(c.output);
  write_moments_csv(sink.os(), rows);
  if (scaling) {
    for (double k : ks)
      for (double h : hs) {
        std::vector<MomentEstimate> sel;
        for (const auto& r : rows)
          if (r.request.k == k && r.request.h == h) sel.push_back(r);
        const auto rep = scaling_report(sel);
        fmt::print(std::cerr, "scaling k={} h={}: slope {} vs exponent {}\n", k, h, rep.slope, rep.exponent);
      }
  }
  return 0;
}

struct InequalityArgs {
  double lo = 1.0e4, hi = 1.1e4;
  std::size_t samples = 1000;
  std::vector<double> ks{1.5};
  double scheme_T = 1.0e4;
  std::vector<double> boundaries{std::exp(2.0), 12.0, 14.0, 20.0};
  double threshold = 0.8;
  double c_omega = 100.0;
  double c_p = 50.0;
  std::string variant = "full_product";
  std::string target = "zeta";
};

int run_inequality(const Common& c, const InequalityArgs& a) {
  if (!(a.hi > a.lo)) fail(ErrorKind::config, "--hi must exceed --lo");
  InterpolationConfig base;
  base.scheme = make_scheme(a.scheme_T, a.threshold, a.boundaries);
  base.c_omega = a.c_omega;
  base.c_p = a.c_p;
  base.variant = parse_variant(a.variant);
  const Target tg = parse_target(a.target);
  Sink sink(c.output);
  auto& os = sink.os();
  os << "t,k,lhs,rhs,margin,pass\n";
  std::size_t failures = 0;
  for (std::size_t ki = 0; ki < a.ks.size(); ++ki) {
    const CounterRng rng(c.seed, ki);
    std::vector<double> ts(a.samples);
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = rng.uniform(i, a.lo, a.hi);
    InterpolationConfig cfg = base;
    cfg.k = a.ks[ki];
    const auto rep = check_interpolation(ts, cfg, tg, c.accuracy(), c.par());
    failures += rep.failures.size();
    for (const auto& p : rep.points)
      fmt::print(os, "{},{},{},{},{},{}\n", p.t, p.k, p.lhs, p.rhs, p.margin, p.pass ? 1 : 0);
  }
  return failures == 0 ? 0 : 1;
}

struct TwistedArgs {
  double T = 1.0e4;
  std::string poly = "1:1";
  int lemma = 1;
  int nodes = 64;
  std::string weight = "derived";
  std::string target = "zeta";
  int depth = 60;
  double tail_tol = 1.0e-8;
  bool direct = false;
  int ppg = 20;
};

int run_twisted(const Common& c, const TwistedArgs& a) {
  if (a.lemma != 1 && a.lemma != 2) fail(ErrorKind::config, "--lemma must be 1 or 2");
  if (a.weight != "derived" && a.weight != "printed")
    fail(ErrorKind::config, fmt::format("unknown weight '{}' (derived or printed)", a.weight));
  const auto A = parse_poly(a.poly);
  const Target tg = parse_target(a.target);
  const CutoffFn phi;
  const double L = std::log(a.T);
  ContourValue v;
  TwistWeight tw;
  if (a.lemma == 1) {
    v = lemma1_main(A, a.T, ShiftConfig::standard(L, a.nodes), phi, tg, c.par());
    tw = tg == Target::zeta ? TwistWeight::dzeta2 : TwistWeight::dZ2;
  } else {
    const auto w = a.weight == "derived" ? Lemma2Weight::derived : Lemma2Weight::printed;
    v = lemma2_main(A, a.T, ShiftConfig::contracted(L, a.nodes), phi, tg, w, {a.depth, a.tail_tol}, c.par());
    tw = tg == Target::zeta ? TwistWeight::zeta2dzeta2 : TwistWeight::Z2dZ2;
  }
  std::string id = a.poly;
  std::replace(id.begin(), id.end(), ',', '+');
  std::vector<ComparisonRow> rows;
  const std::string wname = a.lemma == 2 && tg == Target::zeta ? fmt::format("{}:{}", to_string(tw), a.weight)
                                                               : std::string(to_string(tw));
  rows.push_back({a.T, id, "contour", wname, v.value, v.nodes, 0.0, 1.0});
  if (a.direct) {
    const double mesh = mean_zero_gap(a.T) / a.ppg;
    const double d = twisted_direct(A, a.T, tw, phi, mesh, c.accuracy(), c.par());
    rows.push_back({a.T, id, "direct", wname, d, 0, mesh, d / v.value});
  }
  Sink sink(c.output);
  write_comparison_csv(sink.os(), rows);
  return 0;
}

int run_selftest(const Common& c) {
  const auto rows = cli::run_selftest(c.seed, c.par());
  Sink sink(c.output);
  cli::write_selftest_csv(sink.os(), rows);
  for (const auto& r : rows)
    if (!r.pass) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moments of zeta and Hardy's Z on the critical line"};
  app.set_config("--config", "", "INI/TOML file with option values (flags win)");
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--seed", c.seed, "Seed for sampled grids")->capture_default_str();
  app.add_option("--workers", c.workers, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
  app.add_option("-o,--output", c.output, "CSV output file (default stdout)");
  app.add_option("--cache-dir", c.cache_dir, "Directory for sampled-grid caches");
  app.add_option("--rs-terms", c.rs_terms, "Riemann-Siegel correction terms (0..8)")->capture_default_str();

  double T = 1.0e5, threshold = 0.8;
  std::vector<double> boundaries;
  auto* scheme = app.add_subcommand("scheme", "Increment scheme as CSV");
  scheme->add_option("--T", T, "Height")->capture_default_str();
  scheme->add_option("--threshold", threshold, "Scheme threshold")->capture_default_str();
  scheme->add_option("--boundaries", boundaries, "Custom boundaries T_1 < T_2 < ...");

  std::vector<double> ts;
  double from = 0.0, to = 0.0, step = 0.0;
  auto* eval = app.add_subcommand("eval", "Z, zeta and derivatives on the critical line");
  eval->add_option("--t", ts, "Heights");
  eval->add_option("--from", from);
  eval->add_option("--to", to);
  eval->add_option("--step", step);

  std::vector<double> mT{1.0e4}, mk{1.0}, mh{0.0};
  std::string mtarget = "zeta";
  int ppg = 20;
  bool scaling = false;
  auto* moments = app.add_subcommand("moments", "Joint moments on [T, 2T]");
  moments->set_help_flag("--help", "Print this help message and exit");
  moments->add_option("--T", mT, "Heights")->capture_default_str();
  moments->add_option("--k", mk)->capture_default_str();
  moments->add_option("--h", mh)->capture_default_str();
  moments->add_option("--target", mtarget, "zeta or hardyZ")->capture_default_str();
  moments->add_option("--points-per-gap", ppg)->capture_default_str();
  moments->add_flag("--scaling", scaling, "Fit log(I/T) against log log T (stderr)");

  InequalityArgs ia;
  auto* ineq = app.add_subcommand("inequality", "Interpolation inequality on sampled heights");
  ineq->add_option("--lo", ia.lo)->capture_default_str();
  ineq->add_option("--hi", ia.hi)->capture_default_str();
  ineq->add_option("--samples", ia.samples)->capture_default_str();
  ineq->add_option("--k", ia.ks)->capture_default_str();
  ineq->add_option("--scheme-T", ia.scheme_T)->capture_default_str();
  ineq->add_option("--boundaries", ia.boundaries, "Custom boundaries (empty list: standard scheme)");
  ineq->add_option("--threshold", ia.threshold)->capture_default_str();
  ineq->add_option("--c-omega", ia.c_omega)->capture_default_str();
  ineq->add_option("--c-p", ia.c_p)->capture_default_str();
  ineq->add_option("--variant", ia.variant, "full_product or partial_product")->capture_default_str();
  ineq->add_option("--target", ia.target)->capture_default_str();
  bool standard_scheme = false;
  ineq->add_flag("--standard-scheme", standard_scheme, "Use the standard scheme at --scheme-T");

  TwistedArgs ta;
  auto* twisted = app.add_subcommand("twisted", "Twisted moments: contour main term and direct integral");
  twisted->add_option("--T", ta.T)->capture_default_str();
  twisted->add_option("--poly", ta.poly, "Coefficients n:re[:im],...")->capture_default_str();
  twisted->add_option("--lemma", ta.lemma, "1: |zeta'|^2, 2: |zeta zeta'|^2")->capture_default_str();
  twisted->add_option("--nodes", ta.nodes, "Nodes per circle")->capture_default_str();
  twisted->add_option("--weight", ta.weight, "derived or printed log^2 coefficient")->capture_default_str();
  twisted->add_option("--target", ta.target)->capture_default_str();
  twisted->add_option("--depth", ta.depth, "B series depth")->capture_default_str();
  twisted->add_option("--tail-tol", ta.tail_tol)->capture_default_str();
  twisted->add_option("--points-per-gap", ta.ppg)->capture_default_str();
  twisted->add_flag("--direct", ta.direct, "Also integrate directly");

  auto* selftest = app.add_subcommand("selftest", "Invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(std::cerr, "error,config,{}\n", e.what());
    return 2;
  }

  try {
    if (*scheme) return run_scheme(c, T, threshold, boundaries);
    if (*eval) return run_eval(c, ts, from, to, step);
    if (*moments) return run_moments(c, mT, mk, mh, mtarget, ppg, scaling);
    if (*ineq) {
      if (standard_scheme) ia.boundaries.clear();
      return run_inequality(c, ia);
    }
    if (*twisted) return run_twisted(c, ta);
    if (*selftest) return run_selftest(c);
  } catch (const Error& e) {
    fmt::print(std::cerr, "error,{},{}\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error,internal,{}\n", e.what());
    return 3;
  }
  return 0;
}
