#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "zml/critline.hpp"
#include "zml/dirpoly.hpp"
#include "zml/moments.hpp"
#include "zml/parallel.hpp"
#include "zml/primes.hpp"

namespace zml {

/// Which product multiplies (4 - 2k)|zeta'|^2 inside the v-sum: the full
/// product over 2 <= j <= ell, or the partial one over 2 <= j < v.
enum class ProductVariant { full_product, partial_product };

const char* to_string(ProductVariant v) noexcept;
ProductVariant parse_variant(std::string_view name);

struct InterpolationConfig {
  double k = 1.5;
  IncrementScheme scheme;
  double c_omega = 500.0;
  double c_p = 50.0;
  ProductVariant variant = ProductVariant::full_product;
  std::size_t term_cap = kDefaultTermCap;

  void validate() const;
};

/// ceil(c_p * P) in exact arithmetic (falls back to rationals when the
/// floating product is within rounding of an integer).
long ceil_scaled_variance(double c_p, std::span<const std::uint64_t> range_primes);

struct InterpolationSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double first = 0.0;    // 2k |f|^2 |f'|^2 prod |N_j(k-2)|^2
  double second = 0.0;   // (4-2k) |f'|^2 prod |N_j(k-1)|^2
  std::vector<double> v_terms;  // per nonempty v, in ascending v
};

/// Polynomials and exponents of one configuration, built once and reused for
/// every point.
class InterpolationModel {
 public:
  explicit InterpolationModel(InterpolationConfig cfg);

  const InterpolationConfig& config() const { return cfg_; }
  /// Indices v with a nonempty range, ascending.
  std::span<const int> active() const { return active_; }
  long exponent_half(int v) const;  // ceil(c_p P_v)

  /// Both sides at height t. With `skip_v` >= 0 the summand for that v is
  /// left out of rhs (used to check monotonicity).
  InterpolationSides sides(const CriticalPointSample& s, Target target, int skip_v = -1) const;
  InterpolationSides sides(double t, Target target, const EvalAccuracy& acc = {}) const;

 private:
  InterpolationConfig cfg_;
  std::vector<int> active_;
  std::vector<DirichletPoly> n_lo_;  // N_j(s; k-2), index j
  std::vector<DirichletPoly> n_hi_;  // N_j(s; k-1)
  std::vector<DirichletPoly> p_;     // P_j(s)
  std::vector<long> e_;              // ceil(c_p P_j)
};

/// Both sides of the interpolation inequality at t.
InterpolationSides prop2_sides(double t, const InterpolationConfig& cfg, Target target,
                               const EvalAccuracy& acc = {});

struct InterpolationPoint {
  double t = 0.0;
  double k = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = true;
};

struct InterpolationReport {
  std::vector<InterpolationPoint> points;
  std::vector<std::size_t> failures;  // indices into points
  double min_margin = 0.0;            // 0 for an empty grid
  double min_relative_margin = 0.0;   // min (rhs - lhs) / max(rhs, tiny)
};

InterpolationReport check_interpolation(std::span<const double> grid, const InterpolationConfig& cfg,
                                        Target target, const EvalAccuracy& acc = {},
                                        Parallel par = {});

/// CSV t,k,lhs,rhs,margin,pass.
void write_interpolation_csv(std::ostream& os, const InterpolationReport& report);

struct HolderReport {
  double h = 0.0;
  double lhs = 0.0;    // I(k, h)
  double rhs = 0.0;    // I(k, 1)^h I(k, 0)^{1-h}
  double tol = 0.0;    // 3 * max est_rel_error
  double slack = 0.0;  // rhs (1 + tol) - lhs
  bool pass = false;
};

/// Holder step I(k,h) <= I(k,1)^h I(k,0)^{1-h} (1 + tol). Config error when
/// the estimates differ in T, k, target or mesh, or their h values are not
/// 0, 1 and h.
HolderReport verify_holder(const MomentEstimate& m_k0, const MomentEstimate& m_k1,
                           const MomentEstimate& m_kh, double h);

}  // namespace zml
