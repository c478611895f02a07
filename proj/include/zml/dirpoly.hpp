#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "zml/primes.hpp"

namespace zml {

using cplx = std::complex<double>;

inline constexpr std::size_t kDefaultTermCap = 10'000'000;

/// Sparse Dirichlet polynomial sum_n a_n n^{-s}. Terms are kept sorted by n
/// with no explicit zeros; length_bound is the largest n present (1 for the
/// zero polynomial).
class DirichletPoly {
 public:
  DirichletPoly() = default;

  static DirichletPoly constant(cplx c = 1.0);
  /// Sums duplicate keys and drops zeros.
  static DirichletPoly from_terms(std::vector<std::pair<std::uint64_t, cplx>> terms);

  std::size_t size() const { return n_.size(); }
  bool empty() const { return n_.empty(); }
  std::uint64_t length_bound() const { return n_.empty() ? 1 : n_.back(); }
  std::span<const std::uint64_t> keys() const { return n_; }
  std::span<const cplx> coeffs() const { return a_; }
  /// a_n, zero when n is absent.
  cplx coeff(std::uint64_t n) const;

  friend bool operator==(const DirichletPoly&, const DirichletPoly&) = default;

 private:
  std::vector<std::uint64_t> n_;
  std::vector<cplx> a_;
};

/// Number of prime factors with multiplicity; big_omega(1) = 0.
int big_omega(std::uint64_t n);

/// g(n) = prod 1/m! over p^m || n.
double taylor_g(std::uint64_t n);

/// Prime factorization by trial division, ascending (p, m) pairs.
std::vector<std::pair<std::uint64_t, int>> factorize(std::uint64_t n);

struct MultiplicativeSpec {
  cplx alpha = 0.0;
  int j = 2;
  double omega_cutoff = 500.0;

  void validate() const;
};

/// floor(c * P), the Omega bound for a range of variance P.
int omega_bound(double omega_cutoff, double variance);

/// Number of n supported on `num_primes` primes with Omega(n) <= max_omega,
/// i.e. C(num_primes + max_omega, max_omega), saturating at SIZE_MAX.
std::size_t truncated_term_count(std::size_t num_primes, int max_omega);

/// sum alpha^{Omega(n)} g(n) n^{-s} over n whose prime factors all lie in
/// `primes` and with Omega(n) <= max_omega. Capacity error when the term
/// count exceeds `cap` or some n overflows 64 bits.
DirichletPoly build_truncated_exp(std::span<const std::uint64_t> primes, cplx alpha,
                                  int max_omega, std::size_t cap = kDefaultTermCap);

/// N_j(s; alpha) with Omega(n) <= floor(omega_cutoff * P_j); an empty range
/// gives the constant 1.
DirichletPoly build_Nj(const IncrementScheme& scheme, const MultiplicativeSpec& spec,
                       std::size_t cap = kDefaultTermCap);

/// P_j(s) as a polynomial (coefficient 1 on every prime of range j).
DirichletPoly prime_poly(const IncrementScheme& scheme, int j);

/// sum a_n n^{-1/2-it} in ascending n with compensated accumulation.
cplx poly_eval(const DirichletPoly& poly, double t);
/// sum a_n n^{-s} at a general point.
cplx poly_eval_at(const DirichletPoly& poly, cplx s);
/// sum |a_n| n^{-1/2}, an upper bound for |poly_eval| on the critical line.
double poly_abs_bound(const DirichletPoly& poly);

/// Dirichlet convolution.
DirichletPoly poly_product(const DirichletPoly& a, const DirichletPoly& b,
                           std::size_t cap = kDefaultTermCap);
DirichletPoly poly_product(std::span<const DirichletPoly> factors,
                           std::size_t cap = kDefaultTermCap);
DirichletPoly poly_power(const DirichletPoly& base, int r, std::size_t cap = kDefaultTermCap);

struct ExpIdentityGap {
  double gap = 0.0;                   // |N(1/2+it) - Taylor(alpha P(1/2+it))|
  double max_coeff_rel_diff = 0.0;    // coefficient-level comparison
  std::size_t compared_terms = 0;
  bool supports_match = false;        // same set of n on both sides
};

/// Compares N_j built with Omega cutoff `taylor_depth` to the Taylor
/// polynomial sum_{m <= depth} (alpha P_j)^m / m!, as values at 1/2+it and
/// coefficient by coefficient.
ExpIdentityGap exp_identity_gap(const IncrementScheme& scheme, int j, cplx alpha, double t,
                                int taylor_depth, std::size_t cap = kDefaultTermCap);

/// CSV n,re,im.
void write_poly_csv(std::ostream& os, const DirichletPoly& poly);

}  // namespace zml
