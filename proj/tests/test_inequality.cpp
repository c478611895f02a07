#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "zml/errors.hpp"
#include "zml/inequality.hpp"
#include "zml/rng.hpp"

using namespace zml;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::config;
}

InterpolationConfig toy(double k, ProductVariant v = ProductVariant::full_product) {
  InterpolationConfig cfg;
  cfg.k = k;
  const std::array<double, 4> b{std::exp(2.0), 12.0, 14.0, 20.0};
  cfg.scheme = custom_scheme(1.0e4, b, sieve_primes(100));
  cfg.c_omega = 100.0;
  cfg.c_p = 50.0;
  cfg.variant = v;
  return cfg;
}

// Right side rebuilt from the definitions with plain loops.
double rhs_oracle(const CriticalPointSample& s, const InterpolationConfig& cfg) {
  const double k = cfg.k;
  const double z2 = s.Z * s.Z, d2 = s.abs_zeta_prime_sq();
  const auto& sc = cfg.scheme;
  auto N = [&](int j, double alpha) {
    const auto& r = sc.ranges[static_cast<std::size_t>(j)];
    const double P = sc.variances[static_cast<std::size_t>(j)];
    const int omega = static_cast<int>(std::floor(cfg.c_omega * P));
    return std::norm(poly_eval(build_truncated_exp(r, alpha, omega), s.t));
  };
  std::vector<int> act;
  for (int j = 2; j <= sc.ell; ++j)
    if (!sc.ranges[static_cast<std::size_t>(j)].empty()) act.push_back(j);
  double lo = 1, hi = 1;
  for (int j : act) {
    lo *= N(j, k - 2);
    hi *= N(j, k - 1);
  }
  double rhs = 2 * k * z2 * d2 * lo + (4 - 2 * k) * d2 * hi;
  double lo_b = 1, hi_b = 1;
  for (int v : act) {
    const double P = sc.variances[static_cast<std::size_t>(v)];
    double pv = 0.0;
    {
      cplx acc = 0.0;
      for (auto p : sc.ranges[static_cast<std::size_t>(v)])
        acc += std::exp(-cplx(0.5, s.t) * std::log(static_cast<double>(p)));
      pv = std::abs(acc);
    }
    const double e = std::ceil(cfg.c_p * P);
    const double w = std::pow(pv / (cfg.c_p * P), 2 * e);
    const double hp = cfg.variant == ProductVariant::full_product ? hi : hi_b;
    rhs += (2 * k * z2 * d2 * lo_b + (4 - 2 * k) * d2 * hp) * w;
    lo_b *= N(v, k - 2);
    hi_b *= N(v, k - 1);
  }
  return rhs;
}

}  // namespace

TEST_CASE("exponent rounding") {
  const std::array<std::uint64_t, 1> two{2};
  CHECK(ceil_scaled_variance(4.0, two) == 2);
  const std::array<std::uint64_t, 1> three{3};
  CHECK(ceil_scaled_variance(3.0, three) == 1);
  const std::array<std::uint64_t, 2> r{11, 13};
  CHECK(ceil_scaled_variance(50.0, r) == 9);  // 50 * 24/143 = 8.39
  const std::array<std::uint64_t, 3> r3{2, 3, 6};  // 1/2+1/3+1/6 = 1
  CHECK(ceil_scaled_variance(7.0, r3) == 7);
}

TEST_CASE("configuration") {
  CHECK(kind_of([] { InterpolationModel(toy(2.5)); }) == ErrorKind::domain);
  CHECK(kind_of([] { InterpolationModel(toy(0.9)); }) == ErrorKind::domain);
  auto c = toy(1.5);
  c.c_p = 0.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::config);
  CHECK(parse_variant("partial") == ProductVariant::partial_product);
  const InterpolationModel m(toy(1.5));
  CHECK(std::vector<int>(m.active().begin(), m.active().end()) == std::vector<int>{2, 3, 4});
  CHECK(m.exponent_half(4) == static_cast<long>(std::ceil(50.0 * (1.0 / 17 + 1.0 / 19))));
}

TEST_CASE("both sides against a direct recomputation") {
  const CounterRng rng(3, 0);
  for (double k : {1.0, 1.3, 1.7, 2.0})
    for (auto v : {ProductVariant::full_product, ProductVariant::partial_product}) {
      const auto cfg = toy(k, v);
      const InterpolationModel m(cfg);
      for (std::uint64_t i = 0; i < 5; ++i) {
        const auto s = critical_sample(rng.uniform(i, 1e4, 1.1e4));
        const auto sides = m.sides(s, Target::zeta);
        CHECK(sides.lhs == doctest::Approx(std::pow(std::abs(s.Z), 2 * k - 2) * s.abs_zeta_prime_sq()).epsilon(1e-12));
        CHECK(sides.rhs == doctest::Approx(rhs_oracle(s, cfg)).epsilon(1e-10));
        CHECK(sides.lhs <= sides.rhs);
      }
    }
}

TEST_CASE("degenerate k") {
  const double t = 1000.0 * std::numbers::pi;
  const auto s = critical_sample(t);
  const double z2 = s.Z * s.Z, d2 = s.abs_zeta_prime_sq();

  const auto two = InterpolationModel(toy(2.0)).sides(s, Target::zeta);
  CHECK(two.second == 0.0);
  CHECK(two.lhs == doctest::Approx(z2 * d2));
  CHECK(two.rhs >= 4 * z2 * d2);
  const auto two_p = InterpolationModel(toy(2.0, ProductVariant::partial_product)).sides(s, Target::zeta);
  CHECK(two.v_terms == two_p.v_terms);

  const auto one = InterpolationModel(toy(1.0)).sides(s, Target::zeta);
  CHECK(one.lhs == doctest::Approx(d2));
  CHECK(one.second == doctest::Approx(2.0 * d2).epsilon(1e-14));  // N_j(s; 0) = 1

  const auto mid = InterpolationModel(toy(1.5)).sides(s, Target::zeta);
  CHECK(mid.lhs <= mid.rhs);
}

TEST_CASE("dropping a v term never increases the right side") {
  const auto cfg = toy(1.3);
  const InterpolationModel m(cfg);
  for (double t : {10007.0, 10500.5, 10999.0}) {
    const auto s = critical_sample(t);
    const double full = m.sides(s, Target::zeta).rhs;
    for (int v : m.active()) CHECK(m.sides(s, Target::zeta, v).rhs <= full);
  }
}

TEST_CASE("Z version") {
  const auto s = critical_sample(10123.0);
  const auto z = InterpolationModel(toy(1.5)).sides(s, Target::hardyZ);
  CHECK(z.lhs == doctest::Approx(std::abs(s.Z) * s.Z_prime * s.Z_prime));
  CHECK(z.lhs <= z.rhs);
}

TEST_CASE("grid checks") {
  CHECK(check_interpolation({}, toy(1.5), Target::zeta).points.empty());
  const std::array<double, 1> one{10050.0};
  const auto r = check_interpolation(one, toy(2.0), Target::zeta);
  const auto s = critical_sample(10050.0);
  CHECK(r.failures.empty());
  CHECK(r.min_margin >= 3 * s.Z * s.Z * s.abs_zeta_prime_sq());

  const CounterRng rng(4, 0);
  std::vector<double> ts(300);
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = rng.uniform(i, 1e4, 1.1e4);
  for (double k : {1.0, 1.3, 1.7, 2.0}) {
    const auto rep = check_interpolation(ts, toy(k), Target::zeta, {}, {2});
    CHECK(rep.failures.empty());
    CHECK(rep.points.size() == ts.size());
    CHECK(rep.points[17].t == ts[17]);
  }
  std::ostringstream os;
  write_interpolation_csv(os, r);
  CHECK(os.str().rfind("t,k,lhs,rhs,margin,pass\n", 0) == 0);
}

TEST_CASE("Holder step") {
  const auto g = sample_moment_grid(1.0e3, 20);
  const auto m0 = joint_moment(g, 1.5, 0.0, Target::zeta);
  const auto m1 = joint_moment(g, 1.5, 1.0, Target::zeta);
  const auto h0 = verify_holder(m0, m1, m0, 0.0);
  CHECK(h0.lhs == doctest::Approx(h0.rhs).epsilon(1e-14));
  CHECK(h0.pass);
  const auto h1 = verify_holder(m0, m1, m1, 1.0);
  CHECK(h1.lhs == doctest::Approx(h1.rhs).epsilon(1e-14));
  const auto mh = joint_moment(g, 1.5, 0.5, Target::zeta);
  const auto r = verify_holder(m0, m1, mh, 0.5);
  CHECK(r.pass);
  CHECK(r.slack > 0.0);

  const auto other = joint_moment(g, 1.25, 0.5, Target::zeta);
  CHECK(kind_of([&] { verify_holder(m0, m1, other, 0.5); }) == ErrorKind::config);
  CHECK(kind_of([&] { verify_holder(m0, m1, mh, 0.25); }) == ErrorKind::config);
}
