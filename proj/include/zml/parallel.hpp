#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace zml {

/// Worker-pool sizing shared by all grid computations. Results never depend
/// on `workers`: work is cut into fixed-size blocks whose partial results are
/// combined in block order.
struct Parallel {
  int workers = 1;
};

/// Runs body(block) for block in [0, n_blocks) on up to `par.workers` threads.
/// Blocks are handed out dynamically; body must only write block-owned state.
void for_each_block(std::size_t n_blocks, Parallel par,
                    const std::function<void(std::size_t)>& body);

/// Pairwise (cascade) sum in a fixed order; bit-reproducible for a given input.
template <class T>
T pairwise_sum(std::span<const T> xs) {
  if (xs.empty()) return T{};
  if (xs.size() <= 8) {
    T acc{};
    for (const T& x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(std::complex<double> z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

}  // namespace zml
