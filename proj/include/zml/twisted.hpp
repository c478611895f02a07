#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zml/critline.hpp"
#include "zml/dirpoly.hpp"
#include "zml/moments.hpp"
#include "zml/parallel.hpp"

namespace zml {

using Shifts = std::array<cplx, 4>;

/// Smooth cutoff: 0 outside [3/4, 9/4], 1 on [1, 2], and on the two
/// transition intervals the smooth step built from exp(-sharpness / x).
struct CutoffFn {
  double sharpness = 1.0;

  double operator()(double u) const;
  /// Integral over the real line (5/4 by the symmetry of the step).
  double integral() const { return 1.25; }
};

/// Circles |z_j| = radii[j-1] with nodes_per_circle equispaced nodes each.
struct ShiftConfig {
  double logT = 0.0;
  int nodes_per_circle = 64;
  std::array<double, 4> radii{};

  /// radii 3^j / logT.
  static ShiftConfig standard(double logT, int nodes = 64);
  /// radii min(3^j / logT, max_radius (j + 2) / 6): the standard circles
  /// when they fit inside |z| <= max_radius, otherwise shrunk to it.
  static ShiftConfig contracted(double logT, int nodes = 64, double max_radius = 0.1);

  /// nodes >= 16 and even, radii positive and strictly increasing.
  void validate() const;
  std::vector<cplx> nodes(int j) const;  // j = 1..4
};

struct BSeriesConfig {
  int depth = 60;
  double tail_tolerance = 1.0e-8;

  void validate() const;
};

/// 64-bit binary gcd.
std::uint64_t binary_gcd(std::uint64_t a, std::uint64_t b);

/// sigma_{z1,z2}(n) = sum_{ab = n} a^{-z1} b^{-z2}.
cplx sigma_shift(std::uint64_t n, cplx z1, cplx z2);

struct BValue {
  cplx value;
  double tail_bound;  // relative truncation bound
};

/// B_{z1,z2,z3,z4}(n) with each Euler factor summed to cfg.depth. Truncation
/// error when the tail bound exceeds cfg.tail_tolerance.
BValue b_factor(std::uint64_t n, const Shifts& z, const BSeriesConfig& cfg = {});

inline constexpr std::size_t kDefaultPairCap = 100'000'000;

/// F(z1, z2) = sum_{h,k} a_h conj(a_k) / [h,k] (h,k)^{z1+z2} / (h^{z1} k^{z2}).
cplx f_sum(const DirichletPoly& A, cplx z1, cplx z2, std::size_t pair_cap = kDefaultPairCap,
           Parallel par = {});

/// F on the product grid z1s x z2s, as a row-major matrix [i][j] = F(z1s[i], z2s[j]).
std::vector<cplx> f_sum_grid(const DirichletPoly& A, std::span<const cplx> z1s,
                             std::span<const cplx> z2s, std::size_t pair_cap = kDefaultPairCap);

/// Pair data of A prepared once for repeated G evaluations.
class GSum {
 public:
  explicit GSum(const DirichletPoly& A, std::size_t pair_cap = kDefaultPairCap);

  /// G(z1,z2,z3,z4); tail_bound is the largest relative B tail met.
  BValue operator()(const Shifts& z, const BSeriesConfig& cfg = {}) const;
  bool trivial() const { return primes_.empty(); }

 private:
  struct Pair {
    cplx coeff;  // a_h conj(a_k) / [h,k]
    std::vector<std::pair<int, int>> h_part;  // (prime slot, exponent) of h/(h,k)
    std::vector<std::pair<int, int>> k_part;
  };
  std::vector<std::uint64_t> primes_;
  std::vector<int> max_exp_;
  std::vector<Pair> pairs_;
};

cplx g_sum(const DirichletPoly& A, const Shifts& z, const BSeriesConfig& cfg = {},
           std::size_t pair_cap = kDefaultPairCap);

/// zeta(1+z1+z3) zeta(1+z1+z4) zeta(1+z2+z3) zeta(1+z2+z4) / zeta(2+z1+z2+z3+z4).
/// Pole error when |z_i + z_j| < 1e-10 for one of the four pairs.
cplx a_ratio(const Shifts& z, const EvalAccuracy& acc = {});

/// prod_{j<k} (z_k - z_j).
cplx vandermonde(const Shifts& z);

/// int (log(t/2pi))^log_power (t/2pi)^w phi(t/T) dt by composite Gauss-Legendre.
cplx mellin_weight(cplx w, double T, const CutoffFn& phi = {}, int log_power = 0);

struct ContourValue {
  double value = 0.0;
  double imag = 0.0;  // imaginary part left by the quadrature
  int nodes = 0;
};

/// Main term of the twisted second moment of zeta' (or Z').
ContourValue lemma1_main(const DirichletPoly& A, double T, const ShiftConfig& cfg,
                         const CutoffFn& phi, Target target, Parallel par = {});

/// Coefficient of the log^2 term: 1/4 as derived from the shifted formula,
/// or 1 as in the printed display.
enum class Lemma2Weight { derived, printed };
const char* to_string(Lemma2Weight w) noexcept;

/// Main term of the twisted moment of |zeta zeta'|^2 (or |Z Z'|^2).
ContourValue lemma2_main(const DirichletPoly& A, double T, const ShiftConfig& cfg,
                         const CutoffFn& phi, Target target,
                         Lemma2Weight weight = Lemma2Weight::derived,
                         const BSeriesConfig& bcfg = {}, Parallel par = {});

enum class TwistWeight { dzeta2, zeta2dzeta2, dZ2, Z2dZ2 };
const char* to_string(TwistWeight w) noexcept;

/// Samples on [3T/4, 9T/4] for twisted_direct.
SampledGrid twisted_grid(double T, double mesh, const EvalAccuracy& acc = {}, Parallel par = {});

/// Midpoint sum of weight(t) |A(1/2+it)|^2 phi(t/T) over the grid.
double twisted_direct(const DirichletPoly& A, const SampledGrid& grid, double T, TwistWeight weight,
                      const CutoffFn& phi = {}, Parallel par = {});
double twisted_direct(const DirichletPoly& A, double T, TwistWeight weight, const CutoffFn& phi,
                      double mesh, const EvalAccuracy& acc = {}, Parallel par = {});

struct RankinReport {
  int r = 0;
  double sum = 0.0;
  double bound = 0.0;      // 2^r r! P^r e^P
  double log_sum = 0.0;
  double log_bound = 0.0;
  std::size_t pairs = 0;
  bool pass = false;
};

/// Brute force sum over m, n supported on the primes with Omega = r of
/// r!^2 g(n) g(m) / [n,m], against 2^r r! P^r e^P. Capacity error for more
/// than 8 primes or r > 6.
RankinReport rankin_bound_check(std::span<const std::uint64_t> primes, int r);

/// sum over m, n supported on the primes with Omega(m), Omega(n) <= max_omega
/// of alpha^{Omega(m)+Omega(n)} g(m) g(n) / [m,n], by enumeration.
double cutoff_free_sum(std::span<const std::uint64_t> primes, double alpha, int max_omega);
/// The same sum without cutoff as prod_p sum_{a,b} alpha^{a+b} / (a! b! p^{max(a,b)}).
double cutoff_free_euler_product(std::span<const std::uint64_t> primes, double alpha);

struct ComparisonRow {
  double T = 0.0;
  std::string polynomial_id;
  std::string method;  // direct | contour
  std::string weight;
  double value = 0.0;
  int nodes = 0;
  double mesh = 0.0;
  double ratio = 0.0;  // direct / contour
};

/// CSV T,polynomial_id,method,weight,value,nodes,mesh,ratio.
void write_comparison_csv(std::ostream& os, std::span<const ComparisonRow> rows);

}  // namespace zml
