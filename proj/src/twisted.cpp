#include "zml/twisted.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include "zml/errors.hpp"

namespace zml {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double smooth_step(double x, double sharpness) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-sharpness / x);
  const double b = std::exp(-sharpness / (1.0 - x));
  return a / (a + b);
}

}  // namespace

double CutoffFn::operator()(double u) const {
  if (u <= 0.75 || u >= 2.25) return 0.0;
  if (u < 1.0) return smooth_step(4.0 * (u - 0.75), sharpness);
  if (u <= 2.0) return 1.0;
  return smooth_step(4.0 * (2.25 - u), sharpness);
}

ShiftConfig ShiftConfig::standard(double logT, int nodes) {
  ShiftConfig c;
  c.logT = logT;
  c.nodes_per_circle = nodes;
  for (int j = 1; j <= 4; ++j) c.radii[static_cast<std::size_t>(j - 1)] = std::pow(3.0, j) / logT;
  return c;
}

ShiftConfig ShiftConfig::contracted(double logT, int nodes, double max_radius) {
  ShiftConfig c = standard(logT, nodes);
  for (int j = 1; j <= 4; ++j) {
    auto& r = c.radii[static_cast<std::size_t>(j - 1)];
    r = std::min(r, max_radius * (j + 2) / 6.0);
  }
  return c;
}

void ShiftConfig::validate() const {
  if (nodes_per_circle < 16 || nodes_per_circle % 2 != 0)
    fail(ErrorKind::config, fmt::format("nodes_per_circle = {} must be even and >= 16", nodes_per_circle));
  if (!(radii[0] > 0.0)) fail(ErrorKind::config, "contour radii must be positive");
  for (std::size_t j = 1; j < radii.size(); ++j)
    if (!(radii[j] > radii[j - 1])) fail(ErrorKind::pole, "contour radii must be distinct and increasing");
}

std::vector<cplx> ShiftConfig::nodes(int j) const {
  if (j < 1 || j > 4) fail(ErrorKind::index, fmt::format("circle index {} outside 1..4", j));
  std::vector<cplx> z(static_cast<std::size_t>(nodes_per_circle));
  for (int k = 0; k < nodes_per_circle; ++k)
    z[static_cast<std::size_t>(k)] = std::polar(radii[static_cast<std::size_t>(j - 1)], kTwoPi * k / nodes_per_circle);
  return z;
}

void BSeriesConfig::validate() const {
  if (depth < 10) fail(ErrorKind::config, fmt::format("B series depth {} below 10", depth));
  if (!(tail_tolerance > 0.0)) fail(ErrorKind::config, "tail_tolerance must be positive");
}

std::uint64_t binary_gcd(std::uint64_t a, std::uint64_t b) {
  if (a == 0) return b;
  if (b == 0) return a;
  const int shift = __builtin_ctzll(a | b);
  a >>= __builtin_ctzll(a);
  do {
    b >>= __builtin_ctzll(b);
    if (a > b) std::swap(a, b);
    b -= a;
  } while (b != 0);
  return a << shift;
}

cplx sigma_shift(std::uint64_t n, cplx z1, cplx z2) {
  if (n == 0) fail(ErrorKind::domain, "sigma_shift(0)");
  CompensatedComplexSum acc;
  for (std::uint64_t a = 1; a <= n / a; ++a) {
    if (n % a) continue;
    const std::uint64_t b = n / a;
    const double la = std::log(static_cast<double>(a));
    const double lb = std::log(static_cast<double>(b));
    acc.add(std::exp(-z1 * la - z2 * lb));
    if (a != b) acc.add(std::exp(-z1 * lb - z2 * la));
  }
  return acc.value();
}

namespace {

// Euler factor of B at p: ratio[m] for m = 0..max_m, with the relative
// truncation bound of the worst ratio.
struct EulerFactor {
  std::vector<cplx> ratio;
  double tail = 0.0;
};

EulerFactor b_euler_factor(std::uint64_t p, const Shifts& z, int max_m, int depth) {
  const double lp = std::log(static_cast<double>(p));
  const cplx x1 = std::exp(-z[0] * lp), x2 = std::exp(-z[1] * lp);
  const cplx x3 = std::exp(-z[2] * lp), x4 = std::exp(-z[3] * lp);
  const auto len = static_cast<std::size_t>(depth + max_m + 1);
  std::vector<cplx> s12(len), s34(static_cast<std::size_t>(depth) + 1);
  // sigma(p^n) = x2^n + x1 sigma(p^{n-1})
  cplx pw = 1.0;
  for (std::size_t n = 0; n < len; ++n) {
    s12[n] = pw + (n ? x1 * s12[n - 1] : cplx(0.0));
    pw *= x2;
  }
  pw = 1.0;
  for (std::size_t n = 0; n < s34.size(); ++n) {
    s34[n] = pw + (n ? x3 * s34[n - 1] : cplx(0.0));
    pw *= x4;
  }
  const double pinv = 1.0 / static_cast<double>(p);
  std::vector<cplx> num(static_cast<std::size_t>(max_m) + 1, 0.0);
  double pj = 1.0;
  for (int j = 0; j <= depth; ++j) {
    for (int m = 0; m <= max_m; ++m)
      num[static_cast<std::size_t>(m)] += s12[static_cast<std::size_t>(j + m)] * s34[static_cast<std::size_t>(j)] * pj;
    pj *= pinv;
  }
  const cplx den = num[0];

  // |sigma_{a,b}(p^n)| <= (n+1) p^{n rho}, rho = max(0, -Re a, -Re b).
  const double rho12 = std::max({0.0, -z[0].real(), -z[1].real()});
  const double rho34 = std::max({0.0, -z[2].real(), -z[3].real()});
  const double q = std::exp((rho12 + rho34 - 1.0) * lp);
  EulerFactor out;
  out.ratio.resize(num.size());
  auto tail_of = [&](int m) {
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
    const double J = depth;
    return std::exp(m * rho12 * lp) * (J + m + 2.0) * (J + 2.0) * std::pow(q, J + 1.0) * (1.0 + q) /
           std::pow(1.0 - q, 3.0);
  };
  const double den_rel = tail_of(0) / std::abs(den);
  for (int m = 0; m <= max_m; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    out.ratio[idx] = num[idx] / den;
    const double num_rel = tail_of(m) / std::abs(num[idx]);
    const double rel = den_rel < 1.0 ? (num_rel + den_rel) / (1.0 - den_rel) : std::numeric_limits<double>::infinity();
    out.tail = std::max(out.tail, rel);
  }
  return out;
}

}  // namespace

BValue b_factor(std::uint64_t n, const Shifts& z, const BSeriesConfig& cfg) {
  cfg.validate();
  BValue out{1.0, 0.0};
  for (const auto& [p, m] : factorize(n)) {
    const auto f = b_euler_factor(p, z, m, cfg.depth);
    out.value *= f.ratio[static_cast<std::size_t>(m)];
    out.tail_bound += f.tail;
  }
  if (!(out.tail_bound <= cfg.tail_tolerance))
    fail(ErrorKind::truncation,
         fmt::format("B series tail bound {} above tolerance {} at depth {}", out.tail_bound, cfg.tail_tolerance, cfg.depth));
  return out;
}

namespace {

double inverse_lcm(std::uint64_t h, std::uint64_t k, std::uint64_t g) {
  const unsigned __int128 l = static_cast<unsigned __int128>(h / g) * k;
  return 1.0 / static_cast<double>(l);
}

void check_pairs(const DirichletPoly& A, std::size_t pair_cap) {
  const long double pairs = static_cast<long double>(A.size()) * A.size();
  if (pairs > static_cast<long double>(pair_cap))
    fail(ErrorKind::capacity, fmt::format("{} coefficient pairs above cap {}", static_cast<double>(pairs), pair_cap));
}

}  // namespace

cplx f_sum(const DirichletPoly& A, cplx z1, cplx z2, std::size_t pair_cap, Parallel par) {
  check_pairs(A, pair_cap);
  const auto keys = A.keys();
  const auto a = A.coeffs();
  std::vector<cplx> rows(keys.size());
  for_each_block(keys.size(), par, [&](std::size_t i) {
    CompensatedComplexSum acc;
    const std::uint64_t h = keys[i];
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const std::uint64_t k = keys[j];
      const std::uint64_t g = binary_gcd(h, k);
      const double lh = std::log(static_cast<double>(h / g));
      const double lk = std::log(static_cast<double>(k / g));
      acc.add(a[i] * std::conj(a[j]) * inverse_lcm(h, k, g) * std::exp(-z1 * lh - z2 * lk));
    }
    rows[i] = acc.value();
  });
  return pairwise_sum(std::span<const cplx>(rows));
}

std::vector<cplx> f_sum_grid(const DirichletPoly& A, std::span<const cplx> z1s,
                             std::span<const cplx> z2s, std::size_t pair_cap) {
  check_pairs(A, pair_cap);
  const auto keys = A.keys();
  const auto a = A.coeffs();
  // F = U C V^T with U[i][x] = h'_x^{-z1_i}, V[j][y] = k'_y^{-z2_j}.
  std::map<std::uint64_t, Eigen::Index> hs, ks;
  struct Entry { std::uint64_t h, k; cplx c; };
  std::vector<Entry> entries;
  entries.reserve(keys.size() * keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const std::uint64_t g = binary_gcd(keys[i], keys[j]);
      const std::uint64_t hp = keys[i] / g, kp = keys[j] / g;
      hs.emplace(hp, 0);
      ks.emplace(kp, 0);
      entries.push_back({hp, kp, a[i] * std::conj(a[j]) * inverse_lcm(keys[i], keys[j], g)});
    }
  Eigen::Index idx = 0;
  for (auto& [v, slot] : hs) slot = idx++;
  idx = 0;
  for (auto& [v, slot] : ks) slot = idx++;
  const auto H = static_cast<Eigen::Index>(hs.size()), K = static_cast<Eigen::Index>(ks.size());
  if (static_cast<long double>(H) * K > 2.0e7L)
    fail(ErrorKind::capacity, fmt::format("F grid needs a {} x {} reduced-pair matrix", H, K));

  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(H, K);
  for (const auto& e : entries) C(hs[e.h], ks[e.k]) += e.c;
  const auto n1 = static_cast<Eigen::Index>(z1s.size()), n2 = static_cast<Eigen::Index>(z2s.size());
  Eigen::MatrixXcd U(n1, H), V(n2, K);
  for (const auto& [v, x] : hs) {
    const double lv = std::log(static_cast<double>(v));
    for (Eigen::Index i = 0; i < n1; ++i) U(i, x) = std::exp(-z1s[static_cast<std::size_t>(i)] * lv);
  }
  for (const auto& [v, y] : ks) {
    const double lv = std::log(static_cast<double>(v));
    for (Eigen::Index j = 0; j < n2; ++j) V(j, y) = std::exp(-z2s[static_cast<std::size_t>(j)] * lv);
  }
  const Eigen::MatrixXcd F = U * C * V.transpose();
  std::vector<cplx> out(static_cast<std::size_t>(n1 * n2));
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j) out[static_cast<std::size_t>(i * n2 + j)] = F(i, j);
  return out;
}

GSum::GSum(const DirichletPoly& A, std::size_t pair_cap) {
  check_pairs(A, pair_cap);
  const auto keys = A.keys();
  const auto a = A.coeffs();
  std::map<std::uint64_t, int> slot;
  auto parts = [&](std::uint64_t n) {
    std::vector<std::pair<int, int>> out;
    for (const auto& [p, m] : factorize(n)) {
      auto [it, fresh] = slot.emplace(p, static_cast<int>(slot.size()));
      if (fresh) {
        primes_.push_back(p);
        max_exp_.push_back(0);
      }
      auto& mx = max_exp_[static_cast<std::size_t>(it->second)];
      mx = std::max(mx, m);
      out.emplace_back(it->second, m);
    }
    return out;
  };
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const std::uint64_t g = binary_gcd(keys[i], keys[j]);
      pairs_.push_back({a[i] * std::conj(a[j]) * inverse_lcm(keys[i], keys[j], g), parts(keys[i] / g),
                        parts(keys[j] / g)});
    }
}

BValue GSum::operator()(const Shifts& z, const BSeriesConfig& cfg) const {
  const Shifts swapped{z[2], z[3], z[0], z[1]};
  std::vector<EulerFactor> fh, fk;
  fh.reserve(primes_.size());
  fk.reserve(primes_.size());
  double tail = 0.0;
  for (std::size_t s = 0; s < primes_.size(); ++s) {
    fh.push_back(b_euler_factor(primes_[s], z, max_exp_[s], cfg.depth));
    fk.push_back(b_euler_factor(primes_[s], swapped, max_exp_[s], cfg.depth));
    tail = std::max({tail, fh.back().tail, fk.back().tail});
  }
  CompensatedComplexSum acc;
  for (const auto& pr : pairs_) {
    cplx v = pr.coeff;
    for (const auto& [s, m] : pr.h_part) v *= fh[static_cast<std::size_t>(s)].ratio[static_cast<std::size_t>(m)];
    for (const auto& [s, m] : pr.k_part) v *= fk[static_cast<std::size_t>(s)].ratio[static_cast<std::size_t>(m)];
    acc.add(v);
  }
  return {acc.value(), tail};
}

cplx g_sum(const DirichletPoly& A, const Shifts& z, const BSeriesConfig& cfg, std::size_t pair_cap) {
  cfg.validate();
  const auto v = GSum(A, pair_cap)(z, cfg);
  if (!(v.tail_bound <= cfg.tail_tolerance))
    fail(ErrorKind::truncation, fmt::format("B series tail bound {} above tolerance {}", v.tail_bound, cfg.tail_tolerance));
  return v.value;
}

cplx a_ratio(const Shifts& z, const EvalAccuracy& acc) {
  constexpr std::array<std::pair<int, int>, 4> kPairs{{{0, 2}, {0, 3}, {1, 2}, {1, 3}}};
  cplx num = 1.0;
  for (const auto& [i, j] : kPairs) {
    const cplx u = z[static_cast<std::size_t>(i)] + z[static_cast<std::size_t>(j)];
    if (std::abs(u) < 1.0e-10)
      fail(ErrorKind::pole, fmt::format("z{} + z{} = {} too close to the pole of zeta", i + 1, j + 1, std::abs(u)));
    num *= zeta_em(1.0 + u, acc).zeta;
  }
  return num / zeta_em(2.0 + z[0] + z[1] + z[2] + z[3], acc).zeta;
}

cplx vandermonde(const Shifts& z) {
  cplx v = 1.0;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = j + 1; k < 4; ++k) v *= z[k] - z[j];
  return v;
}

namespace {

// Composite Gauss-Legendre over the support of phi(t/T), in u = t/T:
// sum_i w_i f(t_i) phi(u_i) T.
template <class F>
void for_cutoff_nodes(double T, const CutoffFn& phi, F&& f) {
  using GL = boost::math::quadrature::gauss<double, 30>;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  struct Piece { double a, b; int parts; };
  constexpr std::array<Piece, 3> pieces{{{0.75, 1.0, 16}, {1.0, 2.0, 8}, {2.0, 2.25, 16}}};
  for (const auto& pc : pieces) {
    const double width = (pc.b - pc.a) / pc.parts;
    for (int q = 0; q < pc.parts; ++q) {
      const double mid = pc.a + (q + 0.5) * width;
      const double half = 0.5 * width;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (int sgn : {-1, 1}) {
          if (x[i] == 0.0 && sgn > 0) continue;
          const double u = mid + sgn * half * x[i];
          const double weight = w[i] * half * T * phi(u);
          if (weight != 0.0) f(u * T, weight);
        }
      }
    }
  }
}

std::array<cplx, 3> mellin_weights(cplx w, double T, const CutoffFn& phi) {
  std::array<CompensatedComplexSum, 3> acc;
  for_cutoff_nodes(T, phi, [&](double t, double weight) {
    const double L = std::log(t / kTwoPi);
    const cplx v = weight * std::exp(w * L);
    acc[0].add(v);
    acc[1].add(v * L);
    acc[2].add(v * L * L);
  });
  return {acc[0].value(), acc[1].value(), acc[2].value()};
}

}  // namespace

cplx mellin_weight(cplx w, double T, const CutoffFn& phi, int log_power) {
  if (!(T > 0.0)) fail(ErrorKind::domain, "mellin_weight needs T > 0");
  if (log_power < 0) fail(ErrorKind::domain, "negative log power");
  if (log_power <= 2) return mellin_weights(w, T, phi)[static_cast<std::size_t>(log_power)];
  CompensatedComplexSum acc;
  for_cutoff_nodes(T, phi, [&](double t, double weight) {
    const double L = std::log(t / kTwoPi);
    acc.add(weight * std::pow(L, log_power) * std::exp(w * L));
  });
  return acc.value();
}

ContourValue lemma1_main(const DirichletPoly& A, double T, const ShiftConfig& cfg, const CutoffFn& phi,
                         Target target, Parallel par) {
  cfg.validate();
  if (!(T > kTwoPi)) fail(ErrorKind::domain, "lemma1_main needs T > 2 pi");
  if (static_cast<double>(A.length_bound()) > std::pow(T, 0.45))
    fail(ErrorKind::domain, fmt::format("polynomial length {} exceeds T^0.45", A.length_bound()));
  const auto z1s = cfg.nodes(1);
  const auto z2s = cfg.nodes(2);
  std::vector<cplx> neg_z2(z2s.size());
  std::transform(z2s.begin(), z2s.end(), neg_z2.begin(), [](cplx z) { return -z; });
  const auto F = f_sum_grid(A, z1s, neg_z2);
  const std::size_t n = z1s.size();
  EvalAccuracy acc;

  std::vector<cplx> rows(n);
  for_each_block(n, par, [&](std::size_t a) {
    CompensatedComplexSum row;
    const cplx z1 = z1s[a];
    for (std::size_t b = 0; b < n; ++b) {
      const cplx z2 = z2s[b];
      const cplx u = z1 - z2;
      const cplx zeta = zeta_em(1.0 + u, acc).zeta;
      const auto M = mellin_weights(0.5 * u, T, phi);
      const cplx z12 = z1 * z2;
      const cplx denom = z12 * z12 * z12;  // z1^4 z2^4 / (z1 z2)
      cplx bracket;
      if (target == Target::zeta)
        bracket = u * u * ((z1 + z2) * (z1 + z2) * M[0] - 0.25 * z12 * z12 * M[2]);
      else
        bracket = (z1 * z1 - z2 * z2) * (z1 * z1 - z2 * z2) * M[0];
      row.add(F[a * n + b] * zeta * bracket / denom);
    }
    rows[a] = row.value();
  });
  const cplx total = pairwise_sum(std::span<const cplx>(rows)) / static_cast<double>(n * n);
  return {total.real(), total.imag(), cfg.nodes_per_circle};
}

const char* to_string(Lemma2Weight w) noexcept { return w == Lemma2Weight::derived ? "derived" : "printed"; }

namespace {

// Taylor coefficients of H_j(x) = M_j(x/2) e^{-x Lc/2} / zeta(2 + x) about 0,
// truncated once the terms are negligible on |x| <= x_max.
struct InverseZetaMellin {
  std::vector<cplx> h0, h2;
  double Lc = 0.0;
};

InverseZetaMellin inverse_zeta_mellin(double T, const CutoffFn& phi, double x_max) {
  constexpr int kTerms = 40;
  constexpr int kNodes = 256;
  constexpr double kRadius = 2.0;
  // 1/zeta(2+x) is analytic for |x| < 4 (zero of zeta at -2).
  std::vector<cplx> inv(kTerms, 0.0);
  EvalAccuracy acc;
  for (int q = 0; q < kNodes; ++q) {
    const double ang = kTwoPi * (q + 0.5) / kNodes;
    const cplx x = std::polar(kRadius, ang);
    const cplx f = 1.0 / zeta_em(2.0 + x, acc).zeta;
    cplx rot = 1.0;
    const cplx step = std::polar(1.0 / kRadius, -ang);
    for (int k = 0; k < kTerms; ++k) {
      inv[static_cast<std::size_t>(k)] += f * rot;
      rot *= step;
    }
  }
  for (auto& c : inv) c /= static_cast<double>(kNodes);

  InverseZetaMellin out;
  out.Lc = std::log(T / kTwoPi) + 0.5 * (std::log(0.75) + std::log(2.25));
  // mu_{j,m} = int L^j (L - Lc)^m phi dt
  std::array<std::vector<CompensatedSum>, 2> mu{std::vector<CompensatedSum>(kTerms), std::vector<CompensatedSum>(kTerms)};
  for_cutoff_nodes(T, phi, [&](double t, double weight) {
    const double L = std::log(t / kTwoPi);
    double d = weight;
    for (int m = 0; m < kTerms; ++m) {
      mu[0][static_cast<std::size_t>(m)].add(d);
      mu[1][static_cast<std::size_t>(m)].add(d * L * L);
      d *= (L - out.Lc);
    }
  });
  for (int j = 0; j < 2; ++j) {
    std::vector<cplx> r(kTerms);
    double scale = 1.0;  // 1 / (2^m m!)
    for (int m = 0; m < kTerms; ++m) {
      r[static_cast<std::size_t>(m)] = mu[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)].value() * scale;
      scale /= 2.0 * (m + 1);
    }
    std::vector<cplx> h(kTerms, 0.0);
    for (int a = 0; a < kTerms; ++a)
      for (int b = 0; a + b < kTerms; ++b)
        h[static_cast<std::size_t>(a + b)] += r[static_cast<std::size_t>(a)] * inv[static_cast<std::size_t>(b)];
    double total = 0.0, xp = 1.0;
    for (const auto& c : h) {
      total += std::abs(c) * xp;
      xp *= x_max;
    }
    std::size_t keep = h.size();
    xp = std::pow(x_max, static_cast<double>(keep - 1));
    while (keep > 1 && std::abs(h[keep - 1]) * xp < 1.0e-18 * total) {
      --keep;
      xp /= x_max;
    }
    h.resize(keep);
    (j == 0 ? out.h0 : out.h2) = std::move(h);
  }
  return out;
}

}  // namespace

ContourValue lemma2_main(const DirichletPoly& A, double T, const ShiftConfig& cfg, const CutoffFn& phi,
                         Target target, Lemma2Weight weight, const BSeriesConfig& bcfg, Parallel par) {
  cfg.validate();
  bcfg.validate();
  if (!(T > kTwoPi)) fail(ErrorKind::domain, "lemma2_main needs T > 2 pi");
  if (static_cast<double>(A.length_bound()) > std::pow(T, 0.2))
    fail(ErrorKind::domain, fmt::format("polynomial length {} exceeds T^0.2", A.length_bound()));
  const GSum G(A);
  if (!G.trivial() && cfg.radii[3] >= 0.25)
    fail(ErrorKind::domain, "B series needs |Re z| < 1/4 on every circle");

  const std::array<std::vector<cplx>, 4> z{cfg.nodes(1), cfg.nodes(2), cfg.nodes(3), cfg.nodes(4)};
  const std::size_t n = z[0].size();
  const double x_max = cfg.radii[0] + cfg.radii[1] + cfg.radii[2] + cfg.radii[3];
  if (x_max >= 3.0) fail(ErrorKind::domain, "contour sums reach the zeros of zeta(2 + x)");
  const auto H = inverse_zeta_mellin(T, phi, x_max);
  EvalAccuracy acc;

  // Pair tables. Q13[i1][i3] = zeta(1 + z1 - z3) (z3 - z1)^2 and so on; the
  // squared differences cancel the poles of the zeta factors.
  auto cross = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> q(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const cplx d = b[j] - a[i];
        q[i * n + j] = zeta_em(1.0 - d, acc).zeta * d * d;
      }
    return q;
  };
  const auto q13 = cross(z[0], z[2]), q14 = cross(z[0], z[3]);
  const auto q23 = cross(z[1], z[2]), q24 = cross(z[1], z[3]);
  // Same-side tables carry (z_b - z_a)^2, exp(+-(z_a + z_b) Lc / 2), the
  // measure z/z^6 of both variables, and the symmetric functions needed by
  // the weight.
  auto same = [&](const std::vector<cplx>& a, const std::vector<cplx>& b, double sign) {
    std::vector<cplx> q(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const cplx d = b[j] - a[i];
        const cplx p = a[i] * b[j];
        q[i * n + j] = d * d * std::exp(sign * 0.5 * H.Lc * (a[i] + b[j])) / (p * p * p * p * p);
      }
    return q;
  };
  const auto q12 = same(z[0], z[1], 1.0), q34 = same(z[2], z[3], -1.0);
  const double c2 = weight == Lemma2Weight::derived ? 0.25 : 1.0;
  const bool zeta_target = target == Target::zeta;
  const auto& h0 = H.h0;
  const auto& h2 = H.h2;

  std::vector<cplx> blocks(n);
  double worst_tail = 0.0;
  std::vector<double> tails(n, 0.0);
  for_each_block(n, par, [&](std::size_t i1) {
    CompensatedComplexSum acc1;
    const cplx a1 = z[0][i1];
    for (std::size_t i2 = 0; i2 < n; ++i2) {
      const cplx a2 = z[1][i2];
      const cplx s12 = a1 + a2, p12 = a1 * a2;
      const cplx w12 = q12[i1 * n + i2];
      cplx part12 = 0.0;
      for (std::size_t i3 = 0; i3 < n; ++i3) {
        const cplx a3 = z[2][i3];
        const cplx w123 = w12 * q13[i1 * n + i3] * q23[i2 * n + i3];
        cplx part3 = 0.0;
        for (std::size_t i4 = 0; i4 < n; ++i4) {
          const cplx a4 = z[3][i4];
          const cplx s34 = a3 + a4, p34 = a3 * a4;
          const cplx x = s12 - s34;
          const cplx e3 = p12 * s34 + p34 * s12;
          cplx m0 = h0.back();
          for (std::size_t q = h0.size() - 1; q-- > 0;) m0 = m0 * x + h0[q];
          cplx w = -e3 * e3 * m0;
          if (zeta_target) {
            cplx m2 = h2.back();
            for (std::size_t q = h2.size() - 1; q-- > 0;) m2 = m2 * x + h2[q];
            const cplx e4 = p12 * p34;
            w += c2 * e4 * e4 * m2;
          }
          cplx v = w * q14[i1 * n + i4] * q24[i2 * n + i4] * q34[i3 * n + i4];
          if (!G.trivial()) {
            const auto g = G({a1, a2, -a3, -a4}, bcfg);
            tails[i1] = std::max(tails[i1], g.tail_bound);
            v *= g.value;
          }
          part3 += v;
        }
        part12 += w123 * part3;
      }
      acc1.add(part12);
    }
    blocks[i1] = acc1.value();
  });
  for (double t : tails) worst_tail = std::max(worst_tail, t);
  if (!(worst_tail <= bcfg.tail_tolerance))
    fail(ErrorKind::truncation, fmt::format("B series tail bound {} above tolerance {}", worst_tail, bcfg.tail_tolerance));
  const double nn = static_cast<double>(n);
  const cplx total = 0.25 * pairwise_sum(std::span<const cplx>(blocks)) / (nn * nn * nn * nn);
  return {total.real(), total.imag(), cfg.nodes_per_circle};
}

const char* to_string(TwistWeight w) noexcept {
  switch (w) {
    case TwistWeight::dzeta2: return "dzeta2";
    case TwistWeight::zeta2dzeta2: return "zeta2dzeta2";
    case TwistWeight::dZ2: return "dZ2";
    case TwistWeight::Z2dZ2: return "Z2dZ2";
  }
  return "?";
}

SampledGrid twisted_grid(double T, double mesh, const EvalAccuracy& acc, Parallel par) {
  return sample_grid(0.75 * T, 2.25 * T, mesh, acc, par);
}

double twisted_direct(const DirichletPoly& A, const SampledGrid& grid, double T, TwistWeight weight,
                      const CutoffFn& phi, Parallel par) {
  if (grid.Z.size() != grid.size()) fail(ErrorKind::config, "twisted_direct needs a sampled grid");
  constexpr Eigen::Index kBlock = 4096;
  const Eigen::Index n = grid.size();
  const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
  const bool unit = A.size() == 1 && A.keys()[0] == 1;
  std::vector<double> partial(blocks);
  for_each_block(blocks, par, [&](std::size_t b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * kBlock;
    const Eigen::Index hi = std::min(n, lo + kBlock);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(hi - lo));
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double Z = grid.Z[i], Zp = grid.Z_prime[i], thp = grid.theta_prime[i];
      double f = 0.0;
      switch (weight) {
        case TwistWeight::dzeta2: f = Zp * Zp + thp * thp * Z * Z; break;
        case TwistWeight::zeta2dzeta2: f = Z * Z * (Zp * Zp + thp * thp * Z * Z); break;
        case TwistWeight::dZ2: f = Zp * Zp; break;
        case TwistWeight::Z2dZ2: f = Z * Z * Zp * Zp; break;
      }
      const double a2 = unit ? std::norm(A.coeffs()[0]) : std::norm(poly_eval(A, grid.t[i]));
      vals.push_back(f * a2 * phi(grid.t[i] / T) * grid.weight[i]);
    }
    partial[b] = pairwise_sum(std::span<const double>(vals));
  });
  return pairwise_sum(std::span<const double>(partial));
}

double twisted_direct(const DirichletPoly& A, double T, TwistWeight weight, const CutoffFn& phi, double mesh,
                      const EvalAccuracy& acc, Parallel par) {
  const auto grid = twisted_grid(T, mesh, acc, par);
  return twisted_direct(A, grid, T, weight, phi, par);
}

namespace {

void exponent_vectors(std::size_t m, int r, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (cur.size() + 1 == m) {
    cur.push_back(r);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = 0; e <= r; ++e) {
    cur.push_back(e);
    exponent_vectors(m, r - e, cur, out);
    cur.pop_back();
  }
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

}  // namespace

RankinReport rankin_bound_check(std::span<const std::uint64_t> primes, int r) {
  if (primes.size() > 8 || r > 6)
    fail(ErrorKind::capacity, fmt::format("Rankin check limited to 8 primes and r <= 6 (got {}, {})", primes.size(), r));
  if (primes.empty() || r < 0) fail(ErrorKind::domain, "Rankin check needs primes and r >= 0");
  const std::size_t m = primes.size();
  std::vector<std::vector<int>> vecs;
  std::vector<int> cur;
  exponent_vectors(m, r, cur, vecs);

  // r! g(n) per vector and p^{-e} tables.
  std::vector<double> rg(vecs.size());
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    double l = log_factorial(r);
    for (int e : vecs[i]) l -= log_factorial(e);
    rg[i] = std::exp(l);
  }
  std::vector<std::vector<double>> inv_pow(m, std::vector<double>(static_cast<std::size_t>(r) + 1, 1.0));
  for (std::size_t q = 0; q < m; ++q)
    for (int e = 1; e <= r; ++e)
      inv_pow[q][static_cast<std::size_t>(e)] = inv_pow[q][static_cast<std::size_t>(e - 1)] / static_cast<double>(primes[q]);

  CompensatedSum acc;
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      double v = rg[i] * rg[j];
      for (std::size_t q = 0; q < m; ++q) v *= inv_pow[q][static_cast<std::size_t>(std::max(vecs[i][q], vecs[j][q]))];
      acc.add(v);
    }
  RankinReport rep;
  rep.r = r;
  rep.pairs = vecs.size() * vecs.size();
  rep.sum = acc.value();
  const double P = reciprocal_sum(primes);
  rep.log_sum = std::log(rep.sum);
  rep.log_bound = r * std::log(2.0) + log_factorial(r) + r * std::log(P) + P;
  rep.bound = std::exp(rep.log_bound);
  rep.pass = rep.log_sum <= rep.log_bound;
  return rep;
}

double cutoff_free_sum(std::span<const std::uint64_t> primes, double alpha, int max_omega) {
  // Coefficients alpha^Omega g(n) of the truncated exponential, then the
  // double sum over lcm.
  const auto N = build_truncated_exp(primes, alpha, max_omega);
  const auto keys = N.keys();
  const auto c = N.coeffs();
  CompensatedSum acc;
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const std::uint64_t g = binary_gcd(keys[i], keys[j]);
      acc.add(c[i].real() * c[j].real() * inverse_lcm(keys[i], keys[j], g));
    }
  return acc.value();
}

double cutoff_free_euler_product(std::span<const std::uint64_t> primes, double alpha) {
  constexpr int kTerms = 60;
  double prod = 1.0;
  for (std::uint64_t p : primes) {
    const double lp = std::log(static_cast<double>(p));
    CompensatedSum local;
    for (int a = 0; a < kTerms; ++a)
      for (int b = 0; b < kTerms; ++b) {
        const double mag = std::exp((a + b) * std::log(std::abs(alpha) + 1e-300) - log_factorial(a) - log_factorial(b) -
                                    std::max(a, b) * lp);
        if (alpha == 0.0 && a + b > 0) continue;
        const double sign = (alpha < 0.0 && (a + b) % 2 == 1) ? -1.0 : 1.0;
        local.add(a + b == 0 ? 1.0 : sign * mag);
      }
    prod *= local.value();
  }
  return prod;
}

void write_comparison_csv(std::ostream& os, std::span<const ComparisonRow> rows) {
  os << "T,polynomial_id,method,weight,value,nodes,mesh,ratio\n";
  for (const auto& r : rows)
    fmt::print(os, "{},{},{},{},{},{},{},{}\n", r.T, r.polynomial_id, r.method, r.weight, r.value, r.nodes, r.mesh, r.ratio);
}

}  // namespace zml
