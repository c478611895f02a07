#include "zml/critline.hpp"

#include <boost/math/special_functions/bernoulli.hpp>
#include <fmt/format.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "zml/errors.hpp"
#include "zml/parallel.hpp"

namespace zml {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bernoulli(int two_k) { return boost::math::bernoulli_b2n<double>(two_k / 2); }

}  // namespace

void EvalAccuracy::validate() const {
  if (rs_correction_terms < 0 || rs_correction_terms > 8)
    fail(ErrorKind::config, fmt::format("rs_correction_terms {} outside 0..8", rs_correction_terms));
  if (em_terms < 0 || em_bernoulli_terms < 0)
    fail(ErrorKind::config, "Euler-Maclaurin term counts must be nonnegative");
  if (em_bernoulli_terms > 60) fail(ErrorKind::config, "em_bernoulli_terms above 60");
  if (!(fd_step > 0.0)) fail(ErrorKind::config, "fd_step must be positive");
}

// ---------------------------------------------------------------------------
// theta

ThetaPair theta_pair(double t) {
  if (!(t >= 10.0))
    fail(ErrorKind::regime, fmt::format("theta expansion needs t >= 10 (got {})", t));
  const double lt = std::log(t / kTwoPi);
  double theta = 0.5 * t * lt - 0.5 * t - kPi / 8.0;
  double dtheta = 0.5 * lt;
  // sum_k (1 - 2^{1-2k}) |B_2k| / (4k(2k-1) t^{2k-1})
  const double inv_t2 = 1.0 / (t * t);
  double tpow = 1.0 / t;  // t^{-(2k-1)}
  for (int k = 1; k <= 6; ++k) {
    const double c = (1.0 - std::ldexp(1.0, 1 - 2 * k)) * std::abs(bernoulli(2 * k)) /
                     (4.0 * k * (2.0 * k - 1.0));
    theta += c * tpow;
    dtheta -= c * (2.0 * k - 1.0) * tpow / t;
    tpow *= inv_t2;
  }
  return {theta, dtheta};
}

cplx log_gamma(cplx z) {
  if (!(z.real() > 0.0)) fail(ErrorKind::domain, "log_gamma needs Re z > 0");
  cplx shift{0.0, 0.0};
  while (std::abs(z) < 18.0) {
    shift += std::log(z);
    z += 1.0;
  }
  const cplx inv = 1.0 / z;
  const cplx inv2 = inv * inv;
  cplx series{0.0, 0.0};
  cplx zp = inv;
  for (int k = 1; k <= 12; ++k) {
    series += bernoulli(2 * k) / (2.0 * k * (2.0 * k - 1.0)) * zp;
    zp *= inv2;
  }
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(kTwoPi) + series - shift;
}

cplx digamma(cplx z) {
  if (!(z.real() > 0.0)) fail(ErrorKind::domain, "digamma needs Re z > 0");
  cplx shift{0.0, 0.0};
  while (std::abs(z) < 18.0) {
    shift += 1.0 / z;
    z += 1.0;
  }
  const cplx inv2 = 1.0 / (z * z);
  cplx series{0.0, 0.0};
  cplx zp = inv2;
  for (int k = 1; k <= 12; ++k) {
    series += bernoulli(2 * k) / (2.0 * k) * zp;
    zp *= inv2;
  }
  return std::log(z) - 0.5 / z - series - shift;
}

ThetaPair theta_exact(double t) {
  if (!(t >= 0.0)) fail(ErrorKind::domain, "theta_exact needs t >= 0");
  const cplx z{0.25, 0.5 * t};
  const double theta = log_gamma(z).imag() - 0.5 * t * std::log(kPi);
  const double dtheta = 0.5 * digamma(z).real() - 0.5 * std::log(kPi);
  return {theta, dtheta};
}

// ---------------------------------------------------------------------------
// Riemann-Siegel remainder

namespace {

// Riemann-Siegel remainder coefficients, C_k(p) = sum_j lambda_{k,j}
// Psi^{(m)}(p) / pi^{e} with Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p).
struct RsTerm {
  int derivative;  // m
  int pi_power;    // e
  long double num;
  long double den;
};

constexpr int kMaxRsTerms = 8;  // C_0 .. C_7

const std::array<std::vector<RsTerm>, kMaxRsTerms>& rs_terms() {
  static const std::array<std::vector<RsTerm>, kMaxRsTerms> terms{{
      {{0, 0, 1.0L, 1.0L}},
      {{3, 2, -1.0L, 96.0L}},
      {{6, 4, 1.0L, 18432.0L}, {2, 2, 1.0L, 64.0L}},
      {{9, 6, -1.0L, 5308416.0L}, {5, 4, -1.0L, 3840.0L}, {1, 2, -1.0L, 64.0L}},
      {{12, 8, 1.0L, 2038431744.0L}, {8, 6, 11.0L, 5898240.0L}, {4, 4, 19.0L, 24576.0L},
       {0, 2, 1.0L, 128.0L}},
      {{15, 10, -1.0L, 978447237120.0L}, {11, 8, -7.0L, 849346560.0L},
       {7, 6, -901.0L, 82575360.0L}, {3, 4, -5.0L, 3072.0L}},
      {{18, 12, 1.0L, 563585608581120.0L}, {14, 10, 17.0L, 652298158080.0L},
       {10, 8, 18889.0L, 237817036800.0L}, {6, 6, 367.0L, 7864320.0L}, {2, 4, 5.0L, 2048.0L}},
      {{21, 14, -1.0L, 378729528966512640.0L}, {17, 12, -1.0L, 15655155793920.0L},
       {13, 10, -2131.0L, 5707608883200.0L}, {9, 8, -6649.0L, 11890851840.0L},
       {5, 6, -407.0L, 2621440.0L}, {1, 4, -5.0L, 2048.0L}},
  }};
  return terms;
}

// Each C_k as a power series in u = p - 1/2. Psi is entire; its Taylor
// coefficients about 1/2 come from the Cauchy integral on |p - 1/2| = 1.
constexpr int kSeriesOrder = 64;
constexpr int kPsiCoefficients = kSeriesOrder + 24;

struct RsSeries {
  std::array<std::array<double, kSeriesOrder>, kMaxRsTerms> value{};
  std::array<std::array<double, kSeriesOrder>, kMaxRsTerms> slope{};
  std::array<double, kMaxRsTerms> sup{};  // max over p in [0,1] of |C_k(p)|

  RsSeries() {
    constexpr int nodes = 1024;
    std::array<std::complex<long double>, kPsiCoefficients> acc{};
    for (int j = 0; j < nodes; ++j) {
      const long double phi = 2.0L * std::numbers::pi_v<long double> * (j + 0.5L) / nodes;
      const std::complex<long double> u = std::polar(1.0L, phi);
      const std::complex<long double> p = 0.5L + u;
      const long double tau = 2.0L * std::numbers::pi_v<long double>;
      const auto val = std::cos(tau * (p * p - p - 1.0L / 16.0L)) / std::cos(tau * p);
      const auto rot = std::polar(1.0L, -phi);
      auto w = val;
      for (auto& a : acc) {
        a += w;
        w *= rot;
      }
    }
    std::array<long double, kPsiCoefficients> c{};
    for (std::size_t n = 0; n < c.size(); ++n) c[n] = acc[n].real() / nodes;

    const long double pi = std::numbers::pi_v<long double>;
    for (int k = 0; k < kMaxRsTerms; ++k) {
      for (int n = 0; n < kSeriesOrder; ++n) {
        long double g = 0.0L;
        for (const RsTerm& term : rs_terms()[static_cast<std::size_t>(k)]) {
          long double f = 1.0L;  // (n+m)!/n!
          for (int i = n + 1; i <= n + term.derivative; ++i) f *= i;
          g += term.num / term.den / std::pow(pi, static_cast<long double>(term.pi_power)) *
               c[static_cast<std::size_t>(n + term.derivative)] * f;
        }
        value[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] = static_cast<double>(g);
      }
      for (int n = 0; n + 1 < kSeriesOrder; ++n)
        slope[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
            (n + 1) * value[static_cast<std::size_t>(k)][static_cast<std::size_t>(n + 1)];
      double m = 0.0;
      for (int i = 0; i <= 200; ++i) m = std::max(m, std::abs(eval(value[static_cast<std::size_t>(k)], i / 200.0)));
      sup[static_cast<std::size_t>(k)] = m;
    }
  }

  static double eval(const std::array<double, kSeriesOrder>& coef, double p) {
    const double u = p - 0.5;
    double r = 0.0;
    for (int n = kSeriesOrder - 1; n >= 0; --n) r = r * u + coef[static_cast<std::size_t>(n)];
    return r;
  }
};

const RsSeries& rs_series() {
  static const RsSeries series;
  return series;
}

struct RsTables {
  std::vector<double> log_n;
  std::vector<double> inv_sqrt_n;
  explicit RsTables(std::size_t n) : log_n(n + 1), inv_sqrt_n(n + 1) {
    for (std::size_t i = 1; i <= n; ++i) {
      log_n[i] = std::log(static_cast<double>(i));
      inv_sqrt_n[i] = 1.0 / std::sqrt(static_cast<double>(i));
    }
  }
};

const RsTables& rs_tables() {
  // sqrt(1e7 / 2 pi) < 1262
  static const RsTables tables(1300);
  return tables;
}

}  // namespace

double rs_coefficient(int k, double p) {
  if (k < 0 || k >= kMaxRsTerms) fail(ErrorKind::config, fmt::format("no Riemann-Siegel coefficient C_{}", k));
  return RsSeries::eval(rs_series().value[static_cast<std::size_t>(k)], p);
}

double rs_coefficient_derivative(int k, double p) {
  if (k < 0 || k >= kMaxRsTerms) fail(ErrorKind::config, fmt::format("no Riemann-Siegel coefficient C_{}", k));
  return RsSeries::eval(rs_series().slope[static_cast<std::size_t>(k)], p);
}

HardyValue hardy_Z(double t, const EvalAccuracy& acc) {
  if (!(t >= acc.rs_min_height) || !(t >= 10.0))
    fail(ErrorKind::regime, fmt::format("Riemann-Siegel path needs t >= {} (got {})", acc.rs_min_height, t));
  if (t > acc.height_cap) fail(ErrorKind::regime, fmt::format("height {} above cap {}", t, acc.height_cap));

  const auto [theta, dtheta] = theta_pair(t);
  const double a = std::sqrt(t / kTwoPi);
  const auto n_terms = static_cast<std::size_t>(std::floor(a));
  const auto& tab = rs_tables();

  double z_sum = 0.0;
  double dz_sum = 0.0;
  for (std::size_t n = 1; n <= n_terms; ++n) {
    const double phase = theta - t * tab.log_n[n];
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    z_sum += tab.inv_sqrt_n[n] * c;
    dz_sum -= tab.inv_sqrt_n[n] * s * (dtheta - tab.log_n[n]);
  }
  double Z = 2.0 * z_sum;
  double dZ = 2.0 * dz_sum;

  const int K = acc.rs_correction_terms;
  if (K > 0) {
    const double p = a - static_cast<double>(n_terms);
    const double sign = (n_terms % 2 == 1) ? 1.0 : -1.0;  // (-1)^{N-1}
    double rem = 0.0;
    double drem_da = 0.0;
    double apow = 1.0 / std::sqrt(a);  // a^{-k-1/2}
    const auto& series = rs_series();
    for (int k = 0; k < K; ++k) {
      const double ck = RsSeries::eval(series.value[static_cast<std::size_t>(k)], p);
      const double dck = RsSeries::eval(series.slope[static_cast<std::size_t>(k)], p);
      rem += ck * apow;
      drem_da += dck * apow - (k + 0.5) * ck * apow / a;
      apow /= a;
    }
    Z += sign * rem;
    dZ += sign * drem_da / (2.0 * kTwoPi * a);  // da/dt = 1/(4 pi a)
  }
  // Size of the last retained term (or of C_0 when none is kept), plus
  // rounding in the main sum.
  const int last = std::max(K - 1, 0);
  const double err = rs_series().sup[static_cast<std::size_t>(last)] * std::pow(a, -last - 0.5) +
                     1e-16 * (4.0 * std::sqrt(a) + std::abs(t * std::log(a)) * 1e-1);
  return {Z, dZ, err};
}

// ---------------------------------------------------------------------------
// Euler-Maclaurin

ZetaValue zeta_em(cplx s, const EvalAccuracy& acc) {
  if (s == cplx(1.0, 0.0)) fail(ErrorKind::pole, "zeta has a pole at s = 1");
  if (std::abs(s.imag()) > 1.0e5)
    fail(ErrorKind::regime, fmt::format("Euler-Maclaurin oracle limited to |Im s| <= 1e5 (got {})", s.imag()));
  const int M = acc.em_bernoulli_terms;
  long N = acc.em_terms;
  if (N == 0) N = std::max<long>(20, static_cast<long>(std::ceil(std::abs(s) / kPi)) + 10);

  CompensatedComplexSum head;
  CompensatedComplexSum dhead;
  for (long n = 1; n < N; ++n) {
    const double ln = std::log(static_cast<double>(n));
    const cplx term = std::exp(-s.real() * ln) * std::polar(1.0, -s.imag() * ln);
    head.add(term);
    dhead.add(-ln * term);
  }

  const double lN = std::log(static_cast<double>(N));
  const cplx Ns = std::exp(-s.real() * lN) * std::polar(1.0, -s.imag() * lN);  // N^{-s}
  const double Nd = static_cast<double>(N);
  const cplx sm1 = s - 1.0;
  cplx zeta = head.value() + Nd * Ns / sm1 + 0.5 * Ns;
  cplx dzeta = dhead.value() - lN * Nd * Ns / sm1 - Nd * Ns / (sm1 * sm1) - 0.5 * lN * Ns;

  // B_2k/(2k)! P_k(s) N^{-s-2k+1}, P_k(s) = s (s+1) ... (s+2k-2)
  cplx poch = s;
  cplx dpoch{1.0, 0.0};
  cplx Npow = Ns / Nd;  // N^{-s-1}
  double fact = 2.0;    // (2k)!
  double last = 0.0;
  for (int k = 1; k <= M; ++k) {
    const cplx term = bernoulli(2 * k) / fact * poch * Npow;
    const cplx dterm = bernoulli(2 * k) / fact * (dpoch - lN * poch) * Npow;
    zeta += term;
    dzeta += dterm;
    last = std::abs(term);
    // advance P_k -> P_{k+1}: multiply by (s+2k-1)(s+2k)
    for (int j = 2 * k - 1; j <= 2 * k; ++j) {
      dpoch = dpoch * (s + double(j)) + poch;
      poch *= (s + double(j));
    }
    Npow /= Nd * Nd;
    fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
  }
  const double rounding = 1e-15 * (2.0 * std::sqrt(Nd) + std::abs(zeta));
  return {zeta, dzeta, last + rounding};
}

HardyValue hardy_Z_oracle(double t, const EvalAccuracy& acc) {
  const auto th = t >= 10.0 ? theta_pair(t) : theta_exact(t);
  const auto zv = zeta_em({0.5, t}, acc);
  const cplx rot = std::polar(1.0, th.theta);
  const double Z = (rot * zv.zeta).real();
  // d/dt zeta(1/2+it) = i zeta'(s)
  const double dZ = (cplx(0.0, 1.0) * rot * (th.theta_prime * zv.zeta + zv.zeta_prime)).real();
  return {Z, dZ, zv.est_abs_error};
}

CriticalPointSample critical_sample(double t, const EvalAccuracy& acc) {
  if (!(t >= 10.0)) fail(ErrorKind::regime, fmt::format("critical sample needs t >= 10 (got {})", t));
  if (t > acc.height_cap) fail(ErrorKind::regime, fmt::format("height {} above cap {}", t, acc.height_cap));
  CriticalPointSample out{};
  out.t = t;
  const auto th = theta_pair(t);
  out.theta = th.theta;
  out.theta_prime = th.theta_prime;
  if (t >= acc.rs_min_height) {
    const auto hz = hardy_Z(t, acc);
    out.Z = hz.Z;
    out.Z_prime = hz.Z_prime;
    out.est_abs_error = hz.est_abs_error;
    out.oracle_path = false;
  } else {
    const auto hz = hardy_Z_oracle(t, acc);
    out.Z = hz.Z;
    out.Z_prime = hz.Z_prime;
    out.est_abs_error = hz.est_abs_error;
    out.oracle_path = true;
  }
  // zeta = e^{-i theta} Z,  zeta' = e^{-i theta} (-i Z' - theta' Z)
  const cplx rot = std::polar(1.0, -out.theta);
  out.zeta = rot * out.Z;
  out.zeta_prime = rot * cplx(-out.theta_prime * out.Z, -out.Z_prime);
  return out;
}

double hardy_Z_prime_fd(double t, const EvalAccuracy& acc) {
  const double h = acc.fd_step;
  auto Z = [&](double x) { return x >= acc.rs_min_height ? hardy_Z(x, acc).Z : hardy_Z_oracle(x, acc).Z; };
  return (Z(t - 2 * h) - 8.0 * Z(t - h) + 8.0 * Z(t + h) - Z(t + 2 * h)) / (12.0 * h);
}

// ---------------------------------------------------------------------------
// grid cache

namespace {

constexpr std::array<char, 4> kMagic{'Z', 'M', 'L', '1'};

void put_le(std::ostream& os, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  std::array<char, 8> bytes{};
  for (auto& b : bytes) {
    b = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  os.write(bytes.data(), bytes.size());
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_grid_cache(const std::filesystem::path& path, std::span<const GridRecord> records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::config, fmt::format("cannot write grid cache {}", path.string()));
  os.write(kMagic.data(), kMagic.size());
  os.put(static_cast<char>(kGridCacheVersion));
  for (const auto& r : records) {
    put_le(os, r.t);
    put_le(os, r.Z);
    put_le(os, r.Z_prime);
    put_le(os, r.theta);
    put_le(os, r.theta_prime);
  }
  if (!os) fail(ErrorKind::config, fmt::format("short write to grid cache {}", path.string()));
}

std::vector<GridRecord> read_grid_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::config, fmt::format("cannot read grid cache {}", path.string()));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 5 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                                      [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; }))
    fail(ErrorKind::config, fmt::format("{} is not a ZML1 grid cache", path.string()));
  if (bytes[4] != kGridCacheVersion)
    fail(ErrorKind::config, fmt::format("grid cache version {} unsupported", int(bytes[4])));
  const std::size_t payload = bytes.size() - 5;
  if (payload % 40 != 0) fail(ErrorKind::config, "grid cache payload is not whole records");
  std::vector<GridRecord> out(payload / 40);
  const unsigned char* p = bytes.data() + 5;
  for (auto& r : out) {
    r.t = get_le(p);
    r.Z = get_le(p + 8);
    r.Z_prime = get_le(p + 16);
    r.theta = get_le(p + 24);
    r.theta_prime = get_le(p + 32);
    p += 40;
  }
  return out;
}

}  // namespace zml
