#include "zml/moments.hpp"

#include <Eigen/QR>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <numbers>
#include <ostream>

#include "zml/errors.hpp"

namespace zml {

namespace {

constexpr Eigen::Index kBlock = 2048;
constexpr double kAbsFloor = 1.0e-10;

double sum_fixed_order(const Eigen::ArrayXd& values) {
  return pairwise_sum(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

}  // namespace

const char* to_string(Target target) noexcept {
  return target == Target::zeta ? "zeta" : "hardyZ";
}

Target parse_target(std::string_view name) {
  if (name == "zeta") return Target::zeta;
  if (name == "hardyZ" || name == "Z" || name == "hardyz") return Target::hardyZ;
  fail(ErrorKind::config, fmt::format("unknown target '{}' (zeta or hardyZ)", name));
}

double mean_zero_gap(double T) {
  if (!(T > 2.0 * std::numbers::pi * std::numbers::e))
    fail(ErrorKind::domain, fmt::format("mean zero gap needs T > 2 pi e (got {})", T));
  return 2.0 * std::numbers::pi / std::log(T / (2.0 * std::numbers::pi));
}

std::vector<GridRecord> SampledGrid::records() const {
  std::vector<GridRecord> out(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i)
    out[static_cast<std::size_t>(i)] = {t[i], Z[i], Z_prime[i], theta[i], theta_prime[i]};
  return out;
}

Eigen::ArrayXd SampledGrid::abs_zeta_prime_sq() const {
  return Z_prime.square() + theta_prime.square() * Z.square();
}

SampledGrid midpoint_nodes(double a, double b, double mesh) {
  if (!(b > a) || !(mesh > 0.0)) fail(ErrorKind::bounds, fmt::format("bad grid [{}, {}] mesh {}", a, b, mesh));
  const double span = b - a;
  auto panels = static_cast<Eigen::Index>(std::ceil(span / mesh));
  while (panels > 1 && (panels - 1) * mesh >= span) --panels;
  if (panels > 2'000'000'000) fail(ErrorKind::capacity, fmt::format("{} panels", panels));
  SampledGrid g;
  g.a = a;
  g.b = b;
  g.mesh = mesh;
  g.t.resize(panels);
  g.weight.resize(panels);
  for (Eigen::Index i = 0; i + 1 < panels; ++i) {
    g.t[i] = a + (static_cast<double>(i) + 0.5) * mesh;
    g.weight[i] = mesh;
  }
  const double left = a + static_cast<double>(panels - 1) * mesh;
  g.t[panels - 1] = 0.5 * (left + b);
  g.weight[panels - 1] = b - left;
  return g;
}

SampledGrid sample_grid(double a, double b, double mesh, const EvalAccuracy& acc, Parallel par) {
  acc.validate();
  SampledGrid g = midpoint_nodes(a, b, mesh);
  const Eigen::Index n = g.size();
  g.Z.resize(n);
  g.Z_prime.resize(n);
  g.theta.resize(n);
  g.theta_prime.resize(n);
  const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
  for_each_block(blocks, par, [&](std::size_t blk) {
    const Eigen::Index lo = static_cast<Eigen::Index>(blk) * kBlock;
    const Eigen::Index hi = std::min(n, lo + kBlock);
    for (Eigen::Index i = lo; i < hi; ++i) {
      const auto s = critical_sample(g.t[i], acc);
      g.Z[i] = s.Z;
      g.Z_prime[i] = s.Z_prime;
      g.theta[i] = s.theta;
      g.theta_prime[i] = s.theta_prime;
    }
  });
  return g;
}

bool attach_records(SampledGrid& grid, std::span<const GridRecord> records) {
  if (static_cast<Eigen::Index>(records.size()) != grid.size()) return false;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    if (records[static_cast<std::size_t>(i)].t != grid.t[i]) return false;
  const Eigen::Index n = grid.size();
  grid.Z.resize(n);
  grid.Z_prime.resize(n);
  grid.theta.resize(n);
  grid.theta_prime.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    grid.Z[i] = r.Z;
    grid.Z_prime[i] = r.Z_prime;
    grid.theta[i] = r.theta;
    grid.theta_prime[i] = r.theta_prime;
  }
  return true;
}

void MomentRequest::validate() const {
  if (!(T >= 1.0e3 && T <= 1.0e7))
    fail(ErrorKind::regime, fmt::format("moment height T = {} outside [1e3, 1e7]", T));
  if (!(k > 0.0)) fail(ErrorKind::config, fmt::format("k = {} must be positive", k));
  if (!(h >= 0.0)) fail(ErrorKind::config, fmt::format("h = {} must be nonnegative", h));
  if (h > k + 0.5) fail(ErrorKind::config, fmt::format("h = {} above k + 1/2 = {}", h, k + 0.5));
  if (points_per_gap < 1) fail(ErrorKind::config, "points_per_gap must be at least 1");
}

double MomentEstimate::ratio_to_conjectured_power() const {
  const double L = std::log(request.T);
  return value / (request.T * std::pow(L, request.k * request.k + 2.0 * request.h));
}

namespace {

SampledGrid cached_grid(double a, double b, double mesh, const EvalAccuracy& acc, Parallel par,
                        const std::filesystem::path& file) {
  if (!file.empty() && std::filesystem::exists(file)) {
    SampledGrid g = midpoint_nodes(a, b, mesh);
    try {
      if (attach_records(g, read_grid_cache(file))) return g;
    } catch (const Error&) {
      // unreadable cache: resample below
    }
  }
  SampledGrid g = sample_grid(a, b, mesh, acc, par);
  if (!file.empty()) {
    std::filesystem::create_directories(file.parent_path());
    write_grid_cache(file, g.records());
  }
  return g;
}

}  // namespace

MomentGrid sample_moment_grid(double T, int points_per_gap, const EvalAccuracy& acc, Parallel par,
                              const std::filesystem::path& cache_dir) {
  MomentRequest{T, 1.0, 0.0, Target::zeta, points_per_gap}.validate();
  const double mesh = mean_zero_gap(T) / points_per_gap;
  MomentGrid g;
  g.T = T;
  g.points_per_gap = points_per_gap;
  std::filesystem::path fine_file, coarse_file;
  if (!cache_dir.empty()) {
    const auto stem = fmt::format("grid_T{}_ppg{}_rs{}", T, points_per_gap, acc.rs_correction_terms);
    fine_file = cache_dir / (stem + "_h.zml");
    coarse_file = cache_dir / (stem + "_2h.zml");
  }
  g.fine = cached_grid(T, 2.0 * T, mesh, acc, par, fine_file);
  g.coarse = cached_grid(T, 2.0 * T, 2.0 * mesh, acc, par, coarse_file);
  return g;
}

Eigen::ArrayXd moment_integrand(const SampledGrid& grid, double k, double h, Target target,
                                bool* floored) {
  const double e0 = 2.0 * k - 2.0 * h;
  Eigen::ArrayXd base = grid.Z.abs();
  if (e0 < 0.0) {
    const bool any = (base < kAbsFloor).any();
    if (floored) *floored = any;
    base = base.max(kAbsFloor);
  } else if (floored) {
    *floored = false;
  }
  const Eigen::ArrayXd deriv_sq = target == Target::zeta ? grid.abs_zeta_prime_sq()
                                                         : Eigen::ArrayXd(grid.Z_prime.square());
  return base.pow(e0) * deriv_sq.pow(h);
}

MomentEstimate joint_moment(const MomentGrid& grid, double k, double h, Target target) {
  MomentEstimate est;
  est.request = {grid.T, k, h, target, grid.points_per_gap};
  est.request.validate();
  bool f1 = false, f2 = false;
  const Eigen::ArrayXd fine = moment_integrand(grid.fine, k, h, target, &f1) * grid.fine.weight;
  const Eigen::ArrayXd coarse = moment_integrand(grid.coarse, k, h, target, &f2) * grid.coarse.weight;
  est.value = sum_fixed_order(fine);
  const double value_2h = sum_fixed_order(coarse);
  est.mesh = grid.fine.mesh;
  est.panels = static_cast<std::size_t>(grid.fine.size());
  est.est_rel_error = est.value > 0.0 ? std::abs(est.value - value_2h) / est.value : 0.0;
  est.floored = f1 || f2;
  return est;
}

MomentEstimate joint_moment(const MomentRequest& req, const EvalAccuracy& acc, Parallel par,
                            const std::filesystem::path& cache_dir) {
  req.validate();
  const MomentGrid grid = sample_moment_grid(req.T, req.points_per_gap, acc, par, cache_dir);
  return joint_moment(grid, req.k, req.h, req.target);
}

ScalingReport scaling_report(std::span<const MomentEstimate> estimates) {
  if (estimates.size() < 3)
    fail(ErrorKind::config, fmt::format("scaling report needs at least 3 heights (got {})", estimates.size()));
  for (std::size_t i = 1; i < estimates.size(); ++i)
    if (!(estimates[i].request.T > estimates[i - 1].request.T))
      fail(ErrorKind::config, "scaling report heights must increase");
  ScalingReport rep;
  rep.rows.assign(estimates.begin(), estimates.end());
  const auto& r0 = estimates.front().request;
  rep.exponent = r0.k * r0.k + 2.0 * r0.h;

  const auto n = static_cast<Eigen::Index>(estimates.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = estimates[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    X(i, 1) = std::log(std::log(e.request.T));
    y(i) = std::log(e.value / e.request.T);
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  rep.intercept = beta(0);
  rep.slope = beta(1);
  return rep;
}

ScalingReport scaling_report(std::span<const double> T_list, double k, double h, Target target,
                             int points_per_gap, const EvalAccuracy& acc, Parallel par,
                             const std::filesystem::path& cache_dir) {
  if (T_list.size() < 3)
    fail(ErrorKind::config, fmt::format("scaling report needs at least 3 heights (got {})", T_list.size()));
  std::vector<MomentEstimate> rows;
  for (double T : T_list) rows.push_back(joint_moment({T, k, h, target, points_per_gap}, acc, par, cache_dir));
  return scaling_report(rows);
}

void write_moments_csv(std::ostream& os, std::span<const MomentEstimate> rows) {
  os << "T,k,h,target,value,mesh,panels,est_rel_error,ratio_to_conjectured_power\n";
  for (const auto& r : rows)
    fmt::print(os, "{},{},{},{},{},{},{},{},{}\n", r.request.T, r.request.k, r.request.h,
               to_string(r.request.target), r.value, r.mesh, r.panels, r.est_rel_error,
               r.ratio_to_conjectured_power());
}

}  // namespace zml
