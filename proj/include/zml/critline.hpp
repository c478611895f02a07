#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

namespace zml {

using cplx = std::complex<double>;

/// Knobs for critical-line evaluation.
struct EvalAccuracy {
  /// Riemann-Siegel correction terms C_0..C_{n-1} (n <= 8); 0 keeps only the
  /// main sum.
  int rs_correction_terms = 8;
  /// Euler-Maclaurin head length N; 0 picks N from |s|.
  int em_terms = 0;
  /// Bernoulli terms in the Euler-Maclaurin tail.
  int em_bernoulli_terms = 30;
  /// Step of the finite-difference oracle for Z'.
  double fd_step = 1.0e-3;
  /// Riemann-Siegel path is used from this height on; below it the
  /// Euler-Maclaurin oracle path is used.
  double rs_min_height = 50.0;
  double height_cap = 1.0e7;

  void validate() const;
};

struct ThetaPair {
  double theta;
  double theta_prime;
};

/// Asymptotic expansion of the Riemann-Siegel theta function and its
/// derivative. Regime error for t < 10.
ThetaPair theta_pair(double t);

/// Theta through the complex log-gamma function; valid for every t >= 0.
ThetaPair theta_exact(double t);

/// Principal-branch-continuous log Gamma(z) for Re z > 0.
cplx log_gamma(cplx z);
/// Digamma psi(z) for Re z > 0.
cplx digamma(cplx z);

struct HardyValue {
  double Z;
  double Z_prime;
  double est_abs_error;
};

/// Z(t) and Z'(t) by the Riemann-Siegel formula with analytic term-by-term
/// differentiation. Regime error below acc.rs_min_height or above the cap.
HardyValue hardy_Z(double t, const EvalAccuracy& acc = {});

/// Riemann-Siegel remainder coefficient C_k(p), k = 0..7.
double rs_coefficient(int k, double p);
/// d/dp C_k(p).
double rs_coefficient_derivative(int k, double p);

struct ZetaValue {
  cplx zeta;
  cplx zeta_prime;
  double est_abs_error;
};

/// zeta(s) and zeta'(s) by Euler-Maclaurin summation. Pole error at s = 1,
/// regime error for |Im s| > 1e5.
ZetaValue zeta_em(cplx s, const EvalAccuracy& acc = {});

/// Z(t) = Re(e^{i theta} zeta(1/2 + it)) through the Euler-Maclaurin oracle;
/// valid for all t >= 0.
HardyValue hardy_Z_oracle(double t, const EvalAccuracy& acc = {});

struct CriticalPointSample {
  double t;
  double theta;
  double theta_prime;
  double Z;
  double Z_prime;
  cplx zeta;
  cplx zeta_prime;
  double est_abs_error;
  bool oracle_path;

  double abs_zeta() const { return std::abs(Z); }
  /// |zeta'|^2 = Z'^2 + theta'^2 Z^2.
  double abs_zeta_prime_sq() const { return Z_prime * Z_prime + theta_prime * theta_prime * Z * Z; }
};

/// All critical-line quantities at height t >= 10. Riemann-Siegel path from
/// acc.rs_min_height on, Euler-Maclaurin below.
CriticalPointSample critical_sample(double t, const EvalAccuracy& acc = {});

/// Five-point central difference of Z, the test oracle for Z'.
double hardy_Z_prime_fd(double t, const EvalAccuracy& acc = {});

/// Grid cache record: one sampled height.
struct GridRecord {
  double t;
  double Z;
  double Z_prime;
  double theta;
  double theta_prime;

  friend bool operator==(const GridRecord&, const GridRecord&) = default;
};

/// "ZML1" magic, one version byte, then little-endian float64 quintuples
/// (t, Z, Z', theta, theta').
inline constexpr unsigned char kGridCacheVersion = 1;
void write_grid_cache(const std::filesystem::path& path, std::span<const GridRecord> records);
std::vector<GridRecord> read_grid_cache(const std::filesystem::path& path);

}  // namespace zml
