#include "zml/inequality.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <limits>
#include <ostream>

#include "zml/errors.hpp"

namespace zml {

const char* to_string(ProductVariant v) noexcept {
  return v == ProductVariant::full_product ? "full_product" : "partial_product";
}

ProductVariant parse_variant(std::string_view name) {
  if (name == "full_product" || name == "full") return ProductVariant::full_product;
  if (name == "partial_product" || name == "partial") return ProductVariant::partial_product;
  fail(ErrorKind::config, fmt::format("unknown product variant '{}'", name));
}

void InterpolationConfig::validate() const {
  if (!(k >= 1.0 && k <= 2.0)) fail(ErrorKind::domain, fmt::format("k = {} outside [1, 2]", k));
  if (!(c_omega > 0.0) || !(c_p > 0.0)) fail(ErrorKind::config, "c_omega and c_p must be positive");
  if (scheme.ell < 1) fail(ErrorKind::config, "interpolation needs a built scheme");
}

long ceil_scaled_variance(double c_p, std::span<const std::uint64_t> range_primes) {
  const double x = c_p * reciprocal_sum(range_primes);
  const double r = std::round(x);
  if (std::abs(x - r) > 1.0e-9 * std::max(1.0, x)) return static_cast<long>(std::ceil(x));

  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  // c_p is a binary fraction: m * 2^e exactly.
  int e = 0;
  const double m = std::frexp(c_p, &e);
  const auto mant = static_cast<long long>(std::ldexp(m, 53));
  e -= 53;
  cpp_rational c(mant);
  if (e >= 0)
    c *= cpp_rational(cpp_int(1) << e);
  else
    c /= cpp_rational(cpp_int(1) << -e);
  cpp_rational P(0);
  for (std::uint64_t p : range_primes) P += cpp_rational(1, p);
  const cpp_rational prod = c * P;
  const cpp_int fl = numerator(prod) / denominator(prod);  // floor for positive values
  const bool exact = cpp_rational(fl) == prod;
  return static_cast<long>(fl) + (exact ? 0 : 1);
}

InterpolationModel::InterpolationModel(InterpolationConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto& s = cfg_.scheme;
  const auto n = static_cast<std::size_t>(s.ell) + 1;
  n_lo_.assign(n, DirichletPoly::constant(1.0));
  n_hi_.assign(n, DirichletPoly::constant(1.0));
  p_.assign(n, DirichletPoly{});
  e_.assign(n, 0);
  for (int j = 2; j <= s.ell; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    if (s.ranges[idx].empty()) continue;
    active_.push_back(j);
    n_lo_[idx] = build_Nj(s, {cfg_.k - 2.0, j, cfg_.c_omega}, cfg_.term_cap);
    n_hi_[idx] = build_Nj(s, {cfg_.k - 1.0, j, cfg_.c_omega}, cfg_.term_cap);
    p_[idx] = prime_poly(s, j);
    e_[idx] = ceil_scaled_variance(cfg_.c_p, s.ranges[idx]);
  }
}

long InterpolationModel::exponent_half(int v) const {
  if (v < 2 || v > cfg_.scheme.ell) fail(ErrorKind::index, fmt::format("range index {} out of range", v));
  return e_[static_cast<std::size_t>(v)];
}

InterpolationSides InterpolationModel::sides(const CriticalPointSample& smp, Target target, int skip_v) const {
  const double k = cfg_.k;
  const double f = std::abs(smp.Z);
  const double fp2 = target == Target::zeta ? smp.abs_zeta_prime_sq() : smp.Z_prime * smp.Z_prime;
  const double f2 = f * f;

  InterpolationSides out;
  out.lhs = std::pow(f, 2.0 * k - 2.0) * fp2;

  // |N_j|^2 at this height, and running products over j < v.
  const auto n = static_cast<std::size_t>(cfg_.scheme.ell) + 1;
  std::vector<double> lo(n, 1.0), hi(n, 1.0);
  double lo_all = 1.0, hi_all = 1.0;
  for (int j : active_) {
    const auto idx = static_cast<std::size_t>(j);
    lo[idx] = std::norm(poly_eval(n_lo_[idx], smp.t));
    hi[idx] = std::norm(poly_eval(n_hi_[idx], smp.t));
    lo_all *= lo[idx];
    hi_all *= hi[idx];
  }

  const double c1 = 2.0 * k;
  const double c2 = 4.0 - 2.0 * k;
  out.first = c1 * f2 * fp2 * lo_all;
  out.second = c2 == 0.0 ? 0.0 : c2 * fp2 * hi_all;

  CompensatedSum rhs;
  rhs.add(out.first);
  rhs.add(out.second);
  double lo_before = 1.0, hi_before = 1.0;
  for (int v : active_) {
    const auto idx = static_cast<std::size_t>(v);
    const double pv = cfg_.scheme.variances[idx];
    const double ap = std::abs(poly_eval(p_[idx], smp.t));
    // |P_v / (c_p P_v)|^{2 ceil(c_p P_v)} through its logarithm.
    const double weight =
        ap == 0.0 ? 0.0 : std::exp(2.0 * static_cast<double>(e_[idx]) * (std::log(ap) - std::log(cfg_.c_p * pv)));
    const double hi_prod = cfg_.variant == ProductVariant::full_product ? hi_all : hi_before;
    const double bracket = c1 * f2 * fp2 * lo_before + (c2 == 0.0 ? 0.0 : c2 * fp2 * hi_prod);
    const double term = bracket * weight;
    out.v_terms.push_back(term);
    if (v != skip_v) rhs.add(term);
    lo_before *= lo[idx];
    hi_before *= hi[idx];
  }
  out.rhs = rhs.value();
  return out;
}

InterpolationSides InterpolationModel::sides(double t, Target target, const EvalAccuracy& acc) const {
  return sides(critical_sample(t, acc), target);
}

InterpolationSides prop2_sides(double t, const InterpolationConfig& cfg, Target target,
                               const EvalAccuracy& acc) {
  return InterpolationModel(cfg).sides(t, target, acc);
}

InterpolationReport check_interpolation(std::span<const double> grid, const InterpolationConfig& cfg,
                                        Target target, const EvalAccuracy& acc, Parallel par) {
  InterpolationReport rep;
  if (grid.empty()) return rep;
  const InterpolationModel model(cfg);
  rep.points.resize(grid.size());
  constexpr std::size_t kBlockSize = 256;
  const std::size_t blocks = (grid.size() + kBlockSize - 1) / kBlockSize;
  for_each_block(blocks, par, [&](std::size_t b) {
    const std::size_t hi = std::min(grid.size(), (b + 1) * kBlockSize);
    for (std::size_t i = b * kBlockSize; i < hi; ++i) {
      const auto s = model.sides(grid[i], target, acc);
      auto& p = rep.points[i];
      p.t = grid[i];
      p.k = cfg.k;
      p.lhs = s.lhs;
      p.rhs = s.rhs;
      p.margin = s.rhs - s.lhs;
      p.pass = s.lhs <= s.rhs;
    }
  });
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.min_relative_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const auto& p = rep.points[i];
    if (!p.pass) rep.failures.push_back(i);
    rep.min_margin = std::min(rep.min_margin, p.margin);
    if (p.rhs > 0.0) rep.min_relative_margin = std::min(rep.min_relative_margin, p.margin / p.rhs);
  }
  return rep;
}

void write_interpolation_csv(std::ostream& os, const InterpolationReport& report) {
  os << "t,k,lhs,rhs,margin,pass\n";
  for (const auto& p : report.points)
    fmt::print(os, "{},{},{},{},{},{}\n", p.t, p.k, p.lhs, p.rhs, p.margin, p.pass ? 1 : 0);
}

HolderReport verify_holder(const MomentEstimate& m_k0, const MomentEstimate& m_k1,
                           const MomentEstimate& m_kh, double h) {
  if (!(h >= 0.0 && h <= 1.0)) fail(ErrorKind::config, fmt::format("Holder exponent h = {} outside [0, 1]", h));
  for (const MomentEstimate* m : {&m_k1, &m_kh}) {
    if (m->request.T != m_k0.request.T || m->request.k != m_k0.request.k ||
        m->request.target != m_k0.request.target || m->mesh != m_k0.mesh)
      fail(ErrorKind::config, "Holder check needs estimates with equal T, k, target and mesh");
  }
  if (m_k0.request.h != 0.0 || m_k1.request.h != 1.0 || m_kh.request.h != h)
    fail(ErrorKind::config, "Holder check needs estimates at h = 0, 1 and the tested h");
  HolderReport r;
  r.h = h;
  r.lhs = m_kh.value;
  r.rhs = std::pow(m_k1.value, h) * std::pow(m_k0.value, 1.0 - h);
  r.tol = 3.0 * std::max({m_k0.est_rel_error, m_k1.est_rel_error, m_kh.est_rel_error});
  r.slack = r.rhs * (1.0 + r.tol) - r.lhs;
  r.pass = r.lhs <= r.rhs * (1.0 + r.tol);
  return r;
}

}  // namespace zml
