#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "zml/critline.hpp"
#include "zml/parallel.hpp"

namespace zml {

/// Which function the moments are taken of: |zeta(1/2+it)| or Hardy's Z.
enum class Target { zeta, hardyZ };

const char* to_string(Target target) noexcept;
/// "zeta" or "hardyZ" (also "Z"); config error otherwise.
Target parse_target(std::string_view name);

/// Mean spacing of zeros at height T, 2 pi / log(T / 2 pi).
double mean_zero_gap(double T);

/// Composite midpoint rule on [a, b] with sampled critical-line values.
/// Panels have width `mesh` except the last, which takes what is left.
struct SampledGrid {
  double a = 0.0;
  double b = 0.0;
  double mesh = 0.0;
  Eigen::ArrayXd t;
  Eigen::ArrayXd weight;  // panel widths
  Eigen::ArrayXd Z;
  Eigen::ArrayXd Z_prime;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd theta_prime;

  Eigen::Index size() const { return t.size(); }
  std::vector<GridRecord> records() const;
  /// |zeta'|^2 = Z'^2 + theta'^2 Z^2 at every node.
  Eigen::ArrayXd abs_zeta_prime_sq() const;
};

/// Nodes and weights only; the value columns are left empty.
SampledGrid midpoint_nodes(double a, double b, double mesh);

/// Nodes plus critical_sample at every node, blocks spread over workers.
SampledGrid sample_grid(double a, double b, double mesh, const EvalAccuracy& acc = {},
                        Parallel par = {});

/// Fills the value columns from cached records; false if they do not match
/// the nodes exactly.
bool attach_records(SampledGrid& grid, std::span<const GridRecord> records);

struct MomentRequest {
  double T = 1.0e4;
  double k = 1.0;
  double h = 0.0;
  Target target = Target::zeta;
  int points_per_gap = 20;

  /// Regime error for T outside [1e3, 1e7]; config error for k <= 0,
  /// h < 0, h > k + 1/2 or points_per_gap < 1.
  void validate() const;
};

struct MomentEstimate {
  double value = 0.0;
  double mesh = 0.0;
  std::size_t panels = 0;
  double est_rel_error = 0.0;
  MomentRequest request;
  /// Set when h > k and |zeta| had to be floored to keep the negative power
  /// finite.
  bool floored = false;

  /// value / (T (log T)^{k^2 + 2h}).
  double ratio_to_conjectured_power() const;
};

/// Samples for one T: the mesh-h grid and the mesh-2h comparison grid on [T, 2T].
struct MomentGrid {
  double T = 0.0;
  int points_per_gap = 20;
  SampledGrid fine;
  SampledGrid coarse;
};

/// Samples (or loads from `cache_dir`, when not empty) the two grids for T.
MomentGrid sample_moment_grid(double T, int points_per_gap, const EvalAccuracy& acc = {},
                              Parallel par = {}, const std::filesystem::path& cache_dir = {});

/// Integrand |f|^{2k-2h} |f'|^{2h} on every node of a grid.
Eigen::ArrayXd moment_integrand(const SampledGrid& grid, double k, double h, Target target,
                                bool* floored = nullptr);

/// Midpoint sums on both grids of `grid`; est_rel_error = |I_h - I_2h| / I_h.
MomentEstimate joint_moment(const MomentGrid& grid, double k, double h, Target target);
MomentEstimate joint_moment(const MomentRequest& req, const EvalAccuracy& acc = {},
                            Parallel par = {}, const std::filesystem::path& cache_dir = {});

struct ScalingReport {
  std::vector<MomentEstimate> rows;
  double exponent = 0.0;  // k^2 + 2h
  double slope = 0.0;     // least squares slope of log(I/T) against log log T
  double intercept = 0.0;
};

/// Needs at least three strictly increasing T values (config error otherwise).
ScalingReport scaling_report(std::span<const MomentEstimate> estimates);
ScalingReport scaling_report(std::span<const double> T_list, double k, double h, Target target,
                             int points_per_gap = 20, const EvalAccuracy& acc = {},
                             Parallel par = {}, const std::filesystem::path& cache_dir = {});

/// CSV T,k,h,target,value,mesh,panels,est_rel_error,ratio_to_conjectured_power.
void write_moments_csv(std::ostream& os, std::span<const MomentEstimate> rows);

}  // namespace zml
