#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace zml {

/// Ascending list of all primes up to `limit`.
struct PrimeTable {
  std::uint64_t limit = 0;
  std::vector<std::uint64_t> primes;

  std::size_t size() const { return primes.size(); }
  /// Primes p with lo <= p < hi (real bounds).
  std::span<const std::uint64_t> between(double lo, double hi) const;
};

inline constexpr std::uint64_t kDefaultSieveCap = 100'000'000;

/// Segmented sieve of Eratosthenes. Throws bounds error if limit < 2 or
/// limit > cap.
PrimeTable sieve_primes(std::uint64_t limit, std::uint64_t cap = kDefaultSieveCap);

/// j-fold iterated natural logarithm. Domain error if any stage is <= 0
/// (the argument of each log must be positive, and so must the result).
double iterated_log(double x, int j);

/// Same as iterated_log but x given through its logarithm, so heights far
/// beyond double range can be handled: returns log_j(exp(log_x)).
double iterated_log_from_log(double log_x, int j);

/// Increment scheme: boundaries T_1..T_ell, prime ranges, and the variances
/// P_j = sum 1/p over the j-th range. Arrays are indexed by j directly
/// (index 0 unused, index 1 is T_1).
struct IncrementScheme {
  double log_T = 0.0;      // log of the height T
  double threshold = 0.0;  // ell is the largest j with log_j T >= threshold
  int ell = 0;
  bool custom = false;     // boundaries supplied by the caller

  std::vector<double> boundaries;                         // [j] = T_j, j = 1..ell
  std::vector<double> variances;                          // [j] = P_j, j = 2..ell
  std::vector<std::vector<std::uint64_t>> ranges;         // [j] = primes of range j
  std::vector<double> lower;                              // [j] effective lower edge

  double bigT() const;
  bool empty_range(int j) const { return ranges.at(static_cast<std::size_t>(j)).empty(); }
  /// Number of ranges j = 2..ell that hold at least one prime.
  int nonempty_ranges() const;
};

inline constexpr double kPaperThreshold = 1.0e4;

/// Builds the scheme T_1 = e^2, T_j = exp(log T / (log_j T)^2) for the height
/// exp(log_T). Range j holds primes in [max(T_1..T_{j-1}), T_j); when the
/// boundary sequence is increasing this is exactly [T_{j-1}, T_j).
IncrementScheme build_scheme_log(double log_T, double threshold, const PrimeTable& primes);
IncrementScheme build_scheme(double bigT, double threshold, const PrimeTable& primes);

/// Largest prime boundary the scheme at this height needs (max_j T_j), for
/// sizing the sieve. Throws like build_scheme when no ell >= 1 exists.
double scheme_prime_limit(double log_T, double threshold);

/// Custom scheme mode: boundaries T_1 < T_2 < ... < T_ell given directly.
IncrementScheme custom_scheme(double bigT, std::span<const double> boundaries,
                              const PrimeTable& primes);

/// Prime sum over range j evaluated at s: sum p^{-s}. Index error unless
/// 2 <= j <= ell.
std::complex<double> prime_sum_at(const IncrementScheme& scheme, int j, std::complex<double> s);

/// Same sum at s = 1/2 + it, the form used on the critical line.
std::complex<double> prime_sum_critical(const IncrementScheme& scheme, int j, double t);

/// Mertens-based prediction 2 log_j T - 2 log_{j+1} T for the variance P_j.
double mertens_prediction(const IncrementScheme& scheme, int j);

/// Sum of 1/p in ascending order (the order used for P_j).
double reciprocal_sum(std::span<const std::uint64_t> primes);

/// CSV with header j,T_j,P_j,range_prime_count and rows j = 1..ell.
void write_scheme_csv(std::ostream& os, const IncrementScheme& scheme);

}  // namespace zml
