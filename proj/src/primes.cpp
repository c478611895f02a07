#include "zml/primes.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "zml/errors.hpp"
#include "zml/parallel.hpp"

namespace zml {

std::span<const std::uint64_t> PrimeTable::between(double lo, double hi) const {
  auto first = std::lower_bound(primes.begin(), primes.end(), lo,
                                [](std::uint64_t p, double x) { return static_cast<double>(p) < x; });
  auto last = std::lower_bound(first, primes.end(), hi,
                               [](std::uint64_t p, double x) { return static_cast<double>(p) < x; });
  return {primes.data() + (first - primes.begin()), static_cast<std::size_t>(last - first)};
}

PrimeTable sieve_primes(std::uint64_t limit, std::uint64_t cap) {
  if (limit < 2) fail(ErrorKind::bounds, fmt::format("sieve limit {} below 2", limit));
  if (limit > cap) fail(ErrorKind::bounds, fmt::format("sieve limit {} above cap {}", limit, cap));

  PrimeTable table;
  table.limit = limit;

  // Base primes up to sqrt(limit) by a plain sieve.
  std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit)));
  while (root * root > limit) --root;
  while ((root + 1) * (root + 1) <= limit) ++root;
  std::vector<char> small(root + 1, 1);
  std::vector<std::uint64_t> base;
  for (std::uint64_t i = 2; i <= root; ++i) {
    if (!small[i]) continue;
    base.push_back(i);
    for (std::uint64_t m = i * i; m <= root; m += i) small[m] = 0;
  }

  // Segments of [lo, hi) over odd and even numbers alike.
  constexpr std::uint64_t kSegment = std::uint64_t{1} << 18;
  std::vector<char> mark(kSegment);
  table.primes.reserve(static_cast<std::size_t>(1.1 * limit / std::max(1.0, std::log(double(limit)))) + 16);
  for (std::uint64_t lo = 2; lo <= limit; lo += kSegment) {
    const std::uint64_t hi = std::min(limit + 1, lo + kSegment);
    std::fill(mark.begin(), mark.begin() + static_cast<std::ptrdiff_t>(hi - lo), 1);
    for (std::uint64_t p : base) {
      if (p * p >= hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      for (std::uint64_t m = start; m < hi; m += p) mark[m - lo] = 0;
    }
    for (std::uint64_t n = lo; n < hi; ++n)
      if (mark[n - lo]) table.primes.push_back(n);
  }
  return table;
}

double iterated_log_from_log(double log_x, int j) {
  if (j < 1) fail(ErrorKind::domain, fmt::format("iterated log depth {} < 1", j));
  double v = log_x;
  for (int stage = 2; stage <= j; ++stage) {
    if (!(v > 0.0))
      fail(ErrorKind::domain, fmt::format("iterated log undefined at stage {} (argument {})", stage, v));
    v = std::log(v);
  }
  if (!(v > 0.0))
    fail(ErrorKind::domain, fmt::format("iterated log of depth {} is not positive ({})", j, v));
  return v;
}

double iterated_log(double x, int j) {
  if (!(x > 0.0)) fail(ErrorKind::domain, fmt::format("iterated log of non-positive {}", x));
  return iterated_log_from_log(std::log(x), j);
}

namespace {

// log_j T for j = 1, 2, ... while every stage stays defined and positive.
std::vector<double> log_tower(double log_T) {
  std::vector<double> tower{0.0};  // index 0 unused
  double v = log_T;
  while (v > 0.0) {
    tower.push_back(v);
    v = std::log(v);
  }
  return tower;
}

int find_ell(const std::vector<double>& tower, double threshold) {
  int ell = 0;
  for (std::size_t j = 1; j < tower.size(); ++j)
    if (tower[j] >= threshold) ell = static_cast<int>(j);
    else break;
  return ell;
}

void fill_ranges(IncrementScheme& s, const PrimeTable& primes) {
  const auto n = static_cast<std::size_t>(s.ell) + 1;
  s.ranges.assign(n, {});
  s.variances.assign(n, 0.0);
  s.lower.assign(n, 0.0);
  double running_max = s.ell >= 1 ? s.boundaries[1] : 0.0;
  for (int j = 2; j <= s.ell; ++j) {
    const double hi = s.boundaries[static_cast<std::size_t>(j)];
    s.lower[static_cast<std::size_t>(j)] = running_max;
    if (hi > running_max) {
      if (!std::isfinite(hi) || hi > static_cast<double>(primes.limit) + 1.0)
        fail(ErrorKind::coverage,
             fmt::format("prime table up to {} does not reach T_{} = {}", primes.limit, j, hi));
      auto span = primes.between(running_max, hi);
      s.ranges[static_cast<std::size_t>(j)].assign(span.begin(), span.end());
      s.variances[static_cast<std::size_t>(j)] = reciprocal_sum(span);
    }
    running_max = std::max(running_max, hi);
  }
}

}  // namespace

double reciprocal_sum(std::span<const std::uint64_t> primes) {
  CompensatedSum acc;
  for (std::uint64_t p : primes) acc.add(1.0 / static_cast<double>(p));
  return acc.value();
}

double IncrementScheme::bigT() const { return std::exp(log_T); }

int IncrementScheme::nonempty_ranges() const {
  int count = 0;
  for (int j = 2; j <= ell; ++j)
    if (!ranges[static_cast<std::size_t>(j)].empty()) ++count;
  return count;
}

double scheme_prime_limit(double log_T, double threshold) {
  const auto tower = log_tower(log_T);
  const int ell = find_ell(tower, threshold);
  if (ell < 1)
    fail(ErrorKind::regime,
         fmt::format("scheme undefined at this T: log T = {} below threshold {}", log_T, threshold));
  double top = std::exp(2.0);
  for (int j = 2; j <= ell; ++j) top = std::max(top, std::exp(log_T / (tower[j] * tower[j])));
  return top;
}

IncrementScheme build_scheme_log(double log_T, double threshold, const PrimeTable& primes) {
  const auto tower = log_tower(log_T);
  IncrementScheme s;
  s.log_T = log_T;
  s.threshold = threshold;
  s.ell = find_ell(tower, threshold);
  if (s.ell < 1)
    fail(ErrorKind::regime,
         fmt::format("scheme undefined at this T: log T = {} below threshold {}", log_T, threshold));

  s.boundaries.assign(static_cast<std::size_t>(s.ell) + 1, 0.0);
  s.boundaries[1] = std::exp(2.0);
  for (int j = 2; j <= s.ell; ++j) {
    const double lj = tower[static_cast<std::size_t>(j)];
    s.boundaries[static_cast<std::size_t>(j)] = std::exp(log_T / (lj * lj));
  }
  fill_ranges(s, primes);
  return s;
}

IncrementScheme build_scheme(double bigT, double threshold, const PrimeTable& primes) {
  if (!(bigT > std::numbers::e))
    fail(ErrorKind::domain, fmt::format("scheme height T = {} must exceed e", bigT));
  return build_scheme_log(std::log(bigT), threshold, primes);
}

IncrementScheme custom_scheme(double bigT, std::span<const double> boundaries,
                              const PrimeTable& primes) {
  if (boundaries.empty()) fail(ErrorKind::config, "custom scheme needs at least T_1");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (!(boundaries[i] > boundaries[i - 1]))
      fail(ErrorKind::config, "custom scheme boundaries must be strictly increasing");
  if (!(boundaries[0] > 1.0)) fail(ErrorKind::config, "custom scheme T_1 must exceed 1");

  IncrementScheme s;
  s.log_T = std::log(bigT);
  s.threshold = 0.0;
  s.custom = true;
  s.ell = static_cast<int>(boundaries.size());
  s.boundaries.assign(1, 0.0);
  s.boundaries.insert(s.boundaries.end(), boundaries.begin(), boundaries.end());
  fill_ranges(s, primes);
  return s;
}

std::complex<double> prime_sum_at(const IncrementScheme& scheme, int j, std::complex<double> s) {
  if (j < 2 || j > scheme.ell)
    fail(ErrorKind::index, fmt::format("range index {} outside [2, {}]", j, scheme.ell));
  const auto& range = scheme.ranges[static_cast<std::size_t>(j)];
  if (s == std::complex<double>(1.0, 0.0)) return {reciprocal_sum(range), 0.0};
  CompensatedComplexSum acc;
  for (std::uint64_t p : range) acc.add(std::exp(-s * std::log(static_cast<double>(p))));
  return acc.value();
}

std::complex<double> prime_sum_critical(const IncrementScheme& scheme, int j, double t) {
  if (j < 2 || j > scheme.ell)
    fail(ErrorKind::index, fmt::format("range index {} outside [2, {}]", j, scheme.ell));
  CompensatedComplexSum acc;
  for (std::uint64_t p : scheme.ranges[static_cast<std::size_t>(j)]) {
    const double lp = std::log(static_cast<double>(p));
    acc.add(std::polar(1.0 / std::sqrt(static_cast<double>(p)), -t * lp));
  }
  return acc.value();
}

double mertens_prediction(const IncrementScheme& scheme, int j) {
  return 2.0 * iterated_log_from_log(scheme.log_T, j) -
         2.0 * iterated_log_from_log(scheme.log_T, j + 1);
}

void write_scheme_csv(std::ostream& os, const IncrementScheme& scheme) {
  os << "j,T_j,P_j,range_prime_count\n";
  for (int j = 1; j <= scheme.ell; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const double pj = j >= 2 ? scheme.variances[idx] : 0.0;
    const std::size_t count = j >= 2 ? scheme.ranges[idx].size() : 0;
    fmt::print(os, "{},{},{},{}\n", j, scheme.boundaries[idx], pj, count);
  }
}

}  // namespace zml
