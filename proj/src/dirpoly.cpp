#include "zml/dirpoly.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "zml/errors.hpp"
#include "zml/parallel.hpp"

namespace zml {

DirichletPoly DirichletPoly::constant(cplx c) {
  return from_terms({{1, c}});
}

DirichletPoly DirichletPoly::from_terms(std::vector<std::pair<std::uint64_t, cplx>> terms) {
  for (const auto& [n, a] : terms)
    if (n == 0) fail(ErrorKind::domain, "Dirichlet polynomial index 0");
  std::stable_sort(terms.begin(), terms.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  DirichletPoly p;
  p.n_.reserve(terms.size());
  p.a_.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size();) {
    std::size_t j = i;
    cplx sum = 0.0;
    while (j < terms.size() && terms[j].first == terms[i].first) sum += terms[j++].second;
    if (sum != cplx(0.0)) {
      p.n_.push_back(terms[i].first);
      p.a_.push_back(sum);
    }
    i = j;
  }
  return p;
}

cplx DirichletPoly::coeff(std::uint64_t n) const {
  auto it = std::lower_bound(n_.begin(), n_.end(), n);
  if (it == n_.end() || *it != n) return 0.0;
  return a_[static_cast<std::size_t>(it - n_.begin())];
}

std::vector<std::pair<std::uint64_t, int>> factorize(std::uint64_t n) {
  if (n == 0) fail(ErrorKind::domain, "factorize(0)");
  std::vector<std::pair<std::uint64_t, int>> f;
  auto strip = [&](std::uint64_t p) {
    int m = 0;
    while (n % p == 0) {
      n /= p;
      ++m;
    }
    if (m) f.emplace_back(p, m);
  };
  strip(2);
  strip(3);
  for (std::uint64_t p = 5; p <= n / p; p += 6) {
    strip(p);
    strip(p + 2);
  }
  if (n > 1) f.emplace_back(n, 1);
  return f;
}

int big_omega(std::uint64_t n) {
  int total = 0;
  for (const auto& [p, m] : factorize(n)) total += m;
  return total;
}

double taylor_g(std::uint64_t n) {
  double den = 1.0;
  for (const auto& [p, m] : factorize(n))
    for (int i = 2; i <= m; ++i) den *= i;
  return 1.0 / den;
}

void MultiplicativeSpec::validate() const {
  if (!(omega_cutoff > 0.0)) fail(ErrorKind::config, "omega_cutoff must be positive");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
    fail(ErrorKind::config, "alpha must be finite");
}

int omega_bound(double omega_cutoff, double variance) {
  const double x = std::floor(omega_cutoff * variance);
  if (x > 1.0e6) return 1'000'000;
  return static_cast<int>(x);
}

std::size_t truncated_term_count(std::size_t num_primes, int max_omega) {
  // C(m + K, K) built up incrementally; saturates.
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  long double c = 1.0L;
  for (int i = 1; i <= max_omega; ++i) {
    c = c * static_cast<long double>(num_primes + static_cast<std::size_t>(i)) / i;
    if (c > static_cast<long double>(kMax) / 2) return kMax;
  }
  return static_cast<std::size_t>(std::llround(c));
}

namespace {

struct TruncatedExpBuilder {
  std::span<const std::uint64_t> primes;
  std::vector<cplx> alpha_pow;
  std::vector<double> factorial;
  int max_omega;
  std::vector<std::pair<std::uint64_t, cplx>> out;

  void visit(std::size_t first, std::uint64_t n, int omega, double den) {
    out.emplace_back(n, alpha_pow[static_cast<std::size_t>(omega)] / den);
    for (std::size_t q = first; q < primes.size(); ++q) {
      const std::uint64_t p = primes[q];
      std::uint64_t nn = n;
      for (int e = 1; omega + e <= max_omega; ++e) {
        if (__builtin_mul_overflow(nn, p, &nn))
          fail(ErrorKind::capacity, fmt::format("term index overflows 64 bits ({} * {})", nn, p));
        visit(q + 1, nn, omega + e, den * factorial[static_cast<std::size_t>(e)]);
      }
    }
  }
};

}  // namespace

DirichletPoly build_truncated_exp(std::span<const std::uint64_t> primes, cplx alpha, int max_omega,
                                  std::size_t cap) {
  if (max_omega < 0) fail(ErrorKind::domain, "negative Omega bound");
  if (alpha == cplx(0.0) || primes.empty() || max_omega == 0) return DirichletPoly::constant(1.0);
  const std::size_t count = truncated_term_count(primes.size(), max_omega);
  if (count > cap)
    fail(ErrorKind::capacity,
         fmt::format("truncated exponential needs {} terms ({} primes, Omega <= {}), cap {}",
                     count, primes.size(), max_omega, cap));

  TruncatedExpBuilder b{primes, {}, {}, max_omega, {}};
  b.alpha_pow.resize(static_cast<std::size_t>(max_omega) + 1);
  b.factorial.resize(static_cast<std::size_t>(max_omega) + 1);
  b.alpha_pow[0] = 1.0;
  b.factorial[0] = 1.0;
  for (std::size_t i = 1; i < b.alpha_pow.size(); ++i) {
    b.alpha_pow[i] = b.alpha_pow[i - 1] * alpha;
    b.factorial[i] = b.factorial[i - 1] * static_cast<double>(i);
  }
  b.out.reserve(count);
  b.visit(0, 1, 0, 1.0);
  return DirichletPoly::from_terms(std::move(b.out));
}

DirichletPoly build_Nj(const IncrementScheme& scheme, const MultiplicativeSpec& spec,
                       std::size_t cap) {
  spec.validate();
  if (spec.j < 2 || spec.j > scheme.ell)
    fail(ErrorKind::index, fmt::format("range index {} outside [2, {}]", spec.j, scheme.ell));
  const auto idx = static_cast<std::size_t>(spec.j);
  const int K = omega_bound(spec.omega_cutoff, scheme.variances[idx]);
  try {
    return build_truncated_exp(scheme.ranges[idx], spec.alpha, K, cap);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::capacity) throw;
    fail(ErrorKind::capacity, fmt::format("N_{}: {}", spec.j, e.what()));
  }
}

DirichletPoly prime_poly(const IncrementScheme& scheme, int j) {
  if (j < 2 || j > scheme.ell)
    fail(ErrorKind::index, fmt::format("range index {} outside [2, {}]", j, scheme.ell));
  std::vector<std::pair<std::uint64_t, cplx>> terms;
  for (std::uint64_t p : scheme.ranges[static_cast<std::size_t>(j)]) terms.emplace_back(p, 1.0);
  return DirichletPoly::from_terms(std::move(terms));
}

cplx poly_eval(const DirichletPoly& poly, double t) {
  CompensatedComplexSum acc;
  const auto keys = poly.keys();
  const auto a = poly.coeffs();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double n = static_cast<double>(keys[i]);
    acc.add(a[i] * std::polar(1.0 / std::sqrt(n), -t * std::log(n)));
  }
  return acc.value();
}

cplx poly_eval_at(const DirichletPoly& poly, cplx s) {
  CompensatedComplexSum acc;
  const auto keys = poly.keys();
  const auto a = poly.coeffs();
  for (std::size_t i = 0; i < keys.size(); ++i)
    acc.add(a[i] * std::exp(-s * std::log(static_cast<double>(keys[i]))));
  return acc.value();
}

double poly_abs_bound(const DirichletPoly& poly) {
  CompensatedSum acc;
  const auto keys = poly.keys();
  const auto a = poly.coeffs();
  for (std::size_t i = 0; i < keys.size(); ++i)
    acc.add(std::abs(a[i]) / std::sqrt(static_cast<double>(keys[i])));
  return acc.value();
}

DirichletPoly poly_product(const DirichletPoly& a, const DirichletPoly& b, std::size_t cap) {
  const long double pairs = static_cast<long double>(a.size()) * b.size();
  if (pairs > 16.0L * cap)
    fail(ErrorKind::capacity, fmt::format("product of {} x {} terms exceeds cap {}", a.size(), b.size(), cap));
  std::vector<std::pair<std::uint64_t, cplx>> terms;
  terms.reserve(a.size() * b.size());
  const auto an = a.keys(), bn = b.keys();
  const auto ac = a.coeffs(), bc = b.coeffs();
  for (std::size_t i = 0; i < an.size(); ++i)
    for (std::size_t j = 0; j < bn.size(); ++j) {
      std::uint64_t n;
      if (__builtin_mul_overflow(an[i], bn[j], &n))
        fail(ErrorKind::capacity, fmt::format("product index {} * {} overflows 64 bits", an[i], bn[j]));
      terms.emplace_back(n, ac[i] * bc[j]);
    }
  auto out = DirichletPoly::from_terms(std::move(terms));
  if (out.size() > cap)
    fail(ErrorKind::capacity, fmt::format("product has {} terms, cap {}", out.size(), cap));
  return out;
}

DirichletPoly poly_product(std::span<const DirichletPoly> factors, std::size_t cap) {
  DirichletPoly acc = DirichletPoly::constant(1.0);
  for (const auto& f : factors) acc = poly_product(acc, f, cap);
  return acc;
}

DirichletPoly poly_power(const DirichletPoly& base, int r, std::size_t cap) {
  if (r < 0) fail(ErrorKind::domain, "negative polynomial power");
  DirichletPoly acc = DirichletPoly::constant(1.0);
  for (int i = 0; i < r; ++i) acc = poly_product(acc, base, cap);
  return acc;
}

ExpIdentityGap exp_identity_gap(const IncrementScheme& scheme, int j, cplx alpha, double t,
                                int taylor_depth, std::size_t cap) {
  if (j < 2 || j > scheme.ell)
    fail(ErrorKind::index, fmt::format("range index {} outside [2, {}]", j, scheme.ell));
  if (taylor_depth < 0) fail(ErrorKind::domain, "negative Taylor depth");
  const auto& range = scheme.ranges[static_cast<std::size_t>(j)];
  const DirichletPoly N = build_truncated_exp(range, alpha, taylor_depth, cap);

  // sum_m (alpha P)^m / m! as a polynomial and as a value.
  const DirichletPoly P = prime_poly(scheme, j);
  std::vector<std::pair<std::uint64_t, cplx>> taylor_terms{{1, 1.0}};
  DirichletPoly term = DirichletPoly::constant(1.0);
  const cplx x = alpha * prime_sum_critical(scheme, j, t);
  cplx xm = 1.0;
  CompensatedComplexSum taylor_value;
  taylor_value.add(1.0);
  for (int m = 1; m <= taylor_depth; ++m) {
    xm *= x / static_cast<double>(m);
    taylor_value.add(xm);
    if (alpha == cplx(0.0) || P.empty()) continue;
    term = poly_product(term, P, cap);
    const cplx scale = std::pow(alpha, m);
    double fact = 1.0;
    for (int i = 2; i <= m; ++i) fact *= i;
    const auto keys = term.keys();
    const auto c = term.coeffs();
    for (std::size_t i = 0; i < keys.size(); ++i) taylor_terms.emplace_back(keys[i], c[i] * scale / fact);
  }
  const DirichletPoly T = DirichletPoly::from_terms(std::move(taylor_terms));

  ExpIdentityGap r;
  r.gap = std::abs(poly_eval(N, t) - taylor_value.value());
  r.supports_match = std::equal(N.keys().begin(), N.keys().end(), T.keys().begin(), T.keys().end());
  r.compared_terms = std::min(N.size(), T.size());
  for (std::uint64_t n : N.keys()) {
    const cplx a = N.coeff(n);
    const cplx b = T.coeff(n);
    r.max_coeff_rel_diff = std::max(r.max_coeff_rel_diff, std::abs(a - b) / std::abs(a));
  }
  return r;
}

void write_poly_csv(std::ostream& os, const DirichletPoly& poly) {
  os << "n,re,im\n";
  const auto keys = poly.keys();
  const auto a = poly.coeffs();
  for (std::size_t i = 0; i < keys.size(); ++i)
    fmt::print(os, "{},{},{}\n", keys[i], a[i].real(), a[i].imag());
}

}  // namespace zml
