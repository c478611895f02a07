#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "zml/critline.hpp"
#include "zml/errors.hpp"
#include "zml/rng.hpp"

using namespace zml;

namespace {

using ld = long double;
using lcplx = std::complex<ld>;

// log Gamma by shifting to Re z >= 20 and Stirling with 8 terms.
lcplx log_gamma_stirling(lcplx z) {
  lcplx shift = 0.0L;
  while (z.real() < 20.0L) {
    shift += std::log(z);
    z += 1.0L;
  }
  static const ld b[] = {1.0L / 12, -1.0L / 360, 1.0L / 1260, -1.0L / 1680, 1.0L / 1188,
                         -691.0L / 360360, 1.0L / 156, -3617.0L / 122400};
  lcplx s = (z - 0.5L) * std::log(z) - z + 0.5L * std::log(2.0L * std::numbers::pi_v<ld>);
  lcplx zp = z;
  for (ld c : b) {
    s += c / zp;
    zp *= z * z;
  }
  return s - shift;
}

double theta_stirling(double t) {
  const lcplx lg = log_gamma_stirling(lcplx(0.25L, static_cast<ld>(t) / 2));
  return static_cast<double>(lg.imag() - static_cast<ld>(t) / 2 * std::log(std::numbers::pi_v<ld>));
}

// Z from the Euler-Maclaurin zeta and the Stirling theta.
double Z_oracle(double t) {
  const auto z = zeta_em({0.5, t}).zeta;
  return (std::polar(1.0, theta_stirling(t)) * z).real();
}

template <class F>
double bisect(F f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 80; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::config;
}

}  // namespace

TEST_CASE("theta against Stirling oracle") {
  for (double t : {10.0, 17.0, 50.0, 123.4, 1000.0, 5.0e4}) {
    CHECK(std::abs(theta_pair(t).theta - theta_stirling(t)) < 1e-9);
    CHECK(std::abs(theta_exact(t).theta - theta_stirling(t)) < 1e-9);
  }
  const double h = 1e-4;
  for (double t : {20.0, 300.0}) {
    const double fd = (theta_stirling(t + h) - theta_stirling(t - h)) / (2 * h);
    CHECK(theta_pair(t).theta_prime == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("theta root and derivative") {
  const double root = bisect(theta_stirling, 17.0, 19.0);
  CHECK(root == doctest::Approx(17.8456).epsilon(1e-5));
  CHECK(std::abs(theta_pair(root).theta) < 1e-9);
  const double t = 2 * std::numbers::pi * std::exp(2.0);
  CHECK(std::abs(theta_pair(t).theta_prime - 1.0) < 1e-3);
  CHECK(kind_of([] { theta_pair(9.0); }) == ErrorKind::regime);
  for (double tt : {1e3, 1e5}) {
    const double lead = tt / 2 * std::log(tt / (2 * std::numbers::pi)) - tt / 2 - std::numbers::pi / 8;
    CHECK(std::abs(theta_pair(tt).theta / lead - 1.0) < 1e-6);
  }
}

TEST_CASE("zeta by Euler-Maclaurin") {
  CHECK(zeta_em(2.0).zeta.real() == doctest::Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-13));
  CHECK(std::abs(zeta_em(0.0).zeta - cplx(-0.5)) < 1e-12);
  CHECK(kind_of([] { zeta_em(1.0); }) == ErrorKind::pole);
  for (cplx s : {cplx(0.5, 14.0), cplx(0.3, 250.0), cplx(2.5, -40.0), cplx(-0.2, 1000.0)}) {
    const auto a = zeta_em(s), b = zeta_em(std::conj(s));
    CHECK(std::abs(a.zeta - std::conj(b.zeta)) < 1e-12 * std::max(1.0, std::abs(a.zeta)));
    // derivative against a central difference of the value
    const double h = 1e-5;
    const cplx fd = (zeta_em(s + h).zeta - zeta_em(s - h).zeta) / (2 * h);
    CHECK(std::abs(a.zeta_prime - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("first zero of Z") {
  const double z1 = bisect(Z_oracle, 14.0, 14.3);
  CHECK(z1 == doctest::Approx(14.1347251417).epsilon(1e-9));
  CHECK(std::abs(critical_sample(14.1347251417).Z) < 1e-5);
}

TEST_CASE("29 sign changes on [0, 100]") {
  // Z has no zero below 14; count on a fine grid with the test oracle and
  // confirm each bracket by bisection.
  int oracle = 0, library = 0;
  double po = Z_oracle(10.0), pl = critical_sample(10.0).Z;
  for (int i = 1; i <= 9000; ++i) {
    const double t = 10.0 + 0.01 * i;
    const double zo = Z_oracle(t), zl = critical_sample(t).Z;
    if ((zo > 0) != (po > 0)) {
      ++oracle;
      const double r = bisect(Z_oracle, t - 0.01, t);
      CHECK(std::abs(Z_oracle(r)) < 1e-8);
    }
    if ((zl > 0) != (pl > 0)) ++library;
    po = zo;
    pl = zl;
  }
  CHECK(oracle == 29);
  CHECK(library == 29);
}

TEST_CASE("Riemann-Siegel against Euler-Maclaurin") {
  CHECK(std::abs(std::abs(hardy_Z(100.0).Z) - std::abs(zeta_em({0.5, 100.0}).zeta)) < 1e-6);
  const CounterRng rng(11, 0);
  double worst = 0.0, worst_abs = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const double t = rng.uniform(i, 100.0, 1.0e4);
    worst = std::max(worst, std::abs(hardy_Z(t).Z - hardy_Z_oracle(t).Z));
    const double u = rng.uniform(i + 1000, 50.0, 5000.0);
    worst_abs = std::max(worst_abs, std::abs(std::abs(critical_sample(u).Z) - std::abs(zeta_em({0.5, u}).zeta)));
  }
  CHECK(worst < 1e-6);
  CHECK(worst_abs < 1e-8);
  CHECK(kind_of([] { hardy_Z(40.0); }) == ErrorKind::regime);
  CHECK(kind_of([] { hardy_Z(2.0e7); }) == ErrorKind::regime);
}

TEST_CASE("Z' analytic against finite differences") {
  const double t500 = hardy_Z(500.0).Z_prime;
  CHECK(std::abs(t500 - hardy_Z_prime_fd(500.0)) < 1e-5 * std::abs(t500));
  const CounterRng rng(12, 0);
  int checked = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const double t = rng.uniform(i, 100.0, 5000.0);
    const double a = hardy_Z(t).Z_prime;
    if (std::abs(a) < 1e-2) continue;
    CHECK(std::abs(a - hardy_Z_prime_fd(t)) < 1e-5 * std::abs(a));
    ++checked;
  }
  CHECK(checked > 80);
}

TEST_CASE("critical sample reconstruction") {
  const auto s = critical_sample(1000.0);
  const auto em = zeta_em({0.5, 1000.0});
  CHECK(std::abs(s.zeta - em.zeta) < 1e-6);
  CHECK(std::abs(s.zeta_prime - em.zeta_prime) < 1e-6);
  CHECK(std::abs(s.Z) == std::abs(s.zeta));
  CHECK(std::abs(std::norm(s.zeta_prime) - s.abs_zeta_prime_sq()) < 1e-12 * s.abs_zeta_prime_sq());
  CHECK(!s.oracle_path);
  CHECK(critical_sample(30.0).oracle_path);
  CHECK(kind_of([] { critical_sample(5.0); }) == ErrorKind::regime);
}

TEST_CASE("correction term count") {
  EvalAccuracy acc;
  double prev = 1.0;
  for (int n : {1, 3, 5, 8}) {
    acc.rs_correction_terms = n;
    const double err = std::abs(hardy_Z(60.0, acc).Z - hardy_Z_oracle(60.0).Z);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-8);
  acc.rs_correction_terms = 9;
  CHECK(kind_of([&] { acc.validate(); }) == ErrorKind::config);
  CHECK(kind_of([] { rs_coefficient(8, 0.3); }) == ErrorKind::config);
}

TEST_CASE("grid cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "zml_test_critline";
  std::filesystem::create_directories(dir);
  std::vector<GridRecord> recs;
  for (double t : {100.0, 100.25, 1e6 + 0.1}) {
    const auto s = critical_sample(t);
    recs.push_back({t, s.Z, s.Z_prime, s.theta, s.theta_prime});
  }
  write_grid_cache(dir / "a.zml", recs);
  CHECK(read_grid_cache(dir / "a.zml") == recs);
  {
    std::ifstream is(dir / "a.zml", std::ios::binary);
    char magic[5] = {};
    is.read(magic, 5);
    CHECK(std::string(magic, 4) == "ZML1");
    CHECK(static_cast<int>(magic[4]) == kGridCacheVersion);
  }
  std::ofstream(dir / "bad.zml") << "nope";
  CHECK(kind_of([&] { read_grid_cache(dir / "bad.zml"); }) == ErrorKind::config);
  std::filesystem::remove_all(dir);
}
