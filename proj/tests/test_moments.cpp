#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "zml/errors.hpp"
#include "zml/moments.hpp"

using namespace zml;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::config;
}

const MomentGrid& grid_1e4() {
  static const MomentGrid g = sample_moment_grid(1.0e4, 20, {}, {}, ZML_CACHE_DIR);
  return g;
}

}  // namespace

TEST_CASE("mesh and nodes") {
  CHECK(mean_zero_gap(1.0e4) == doctest::Approx(2 * std::numbers::pi / std::log(1.0e4 / (2 * std::numbers::pi))));
  CHECK(kind_of([] { mean_zero_gap(10.0); }) == ErrorKind::domain);
  const auto g = midpoint_nodes(0.0, 1.0, 0.3);
  REQUIRE(g.size() == 4);
  CHECK(g.t[0] == doctest::Approx(0.15));
  CHECK(g.weight[3] == doctest::Approx(0.1));
  CHECK(g.t[3] == doctest::Approx(0.95));
  CHECK(g.weight.sum() == doctest::Approx(1.0));
  CHECK(midpoint_nodes(0.0, 1.0, 0.25).size() == 4);
  CHECK(kind_of([] { midpoint_nodes(1.0, 0.0, 0.1); }) == ErrorKind::bounds);
}

TEST_CASE("request validation") {
  CHECK(kind_of([] { joint_moment(MomentRequest{100.0, 1.0, 0.0}); }) == ErrorKind::regime);
  CHECK(kind_of([] { joint_moment(MomentRequest{2.0e7, 1.0, 0.0}); }) == ErrorKind::regime);
  CHECK(kind_of([] { MomentRequest{1e4, 1.0, 1.6}.validate(); }) == ErrorKind::config);
  CHECK(kind_of([] { MomentRequest{1e4, 0.0, 0.0}.validate(); }) == ErrorKind::config);
  CHECK(parse_target("Z") == Target::hardyZ);
  CHECK(kind_of([] { parse_target("xi"); }) == ErrorKind::config);
}

TEST_CASE("second moment at T = 1e4") {
  const auto m = joint_moment(grid_1e4(), 1.0, 0.0, Target::zeta);
  const double ratio = m.value / (1.0e4 * std::log(1.0e4));
  CHECK(std::abs(ratio - 1.0) < 0.15);
  CHECK(m.mesh == doctest::Approx(mean_zero_gap(1.0e4) / 20));
  CHECK(m.panels == static_cast<std::size_t>(grid_1e4().fine.size()));
  CHECK(m.ratio_to_conjectured_power() == doctest::Approx(ratio));
  // Ingham: int_T^{2T} |zeta|^2 = 2T log 2T - T log T - (1 + log 2pi - 2 gamma) T + O(T^{1/2} log T)
  const double T = 1.0e4, g = 0.5772156649015329;
  const double ingham = 2 * T * std::log(2 * T) - T * std::log(T) - (1 + std::log(2 * std::numbers::pi) - 2 * g) * T;
  CHECK(std::abs(m.value / ingham - 1.0) < 0.01);
}

TEST_CASE("zeta and Z agree when h = 0") {
  for (double k : {0.5, 1.0, 1.7}) {
    const auto a = joint_moment(grid_1e4(), k, 0.0, Target::zeta);
    const auto b = joint_moment(grid_1e4(), k, 0.0, Target::hardyZ);
    CHECK(a.value == b.value);
  }
}

TEST_CASE("integrand algebra") {
  const auto& g = grid_1e4().coarse;
  const Eigen::ArrayXd a = moment_integrand(g, 1.5, 1.5, Target::zeta);
  const Eigen::ArrayXd b = g.abs_zeta_prime_sq().pow(1.5);
  CHECK(((a - b).abs() <= 1e-12 * b.abs().max(1.0)).all());
  CHECK((moment_integrand(g, 1.3, 0.7, Target::hardyZ) >= 0.0).all());
  bool floored = false;
  moment_integrand(g, 1.0, 1.2, Target::zeta, &floored);
  CHECK(!floored);  // no sample hits |Z| < 1e-10 on this grid
}

TEST_CASE("mesh halving") {
  const auto coarse = sample_moment_grid(1.0e3, 20);
  const auto fine = sample_moment_grid(1.0e3, 40);
  for (auto [k, h] : {std::pair{1.0, 0.0}, {1.5, 0.5}, {2.0, 1.0}}) {
    const auto a = joint_moment(coarse, k, h, Target::zeta);
    const auto b = joint_moment(fine, k, h, Target::zeta);
    CHECK(std::abs(b.value - a.value) / a.value < 3.0 * a.est_rel_error + 1e-12);
    CHECK(a.value >= 0.0);
  }
}

TEST_CASE("continuity in h") {
  const auto& g = grid_1e4();
  const double base = joint_moment(g, 1.2, 0.5, Target::zeta).value;
  double prev = 1e300;
  for (double d : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double diff = std::abs(joint_moment(g, 1.2, 0.5 + d, Target::zeta).value - base) / base;
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("grid cache is bit exact") {
  const auto dir = std::filesystem::temp_directory_path() / "zml_test_moments_cache";
  std::filesystem::remove_all(dir);
  const auto a = sample_moment_grid(1.0e3, 10, {}, {}, dir);
  CHECK(std::filesystem::exists(dir));
  const auto b = sample_moment_grid(1.0e3, 10, {}, {}, dir);
  CHECK((a.fine.Z == b.fine.Z).all());
  CHECK((a.fine.Z_prime == b.fine.Z_prime).all());
  CHECK((a.coarse.theta_prime == b.coarse.theta_prime).all());
  std::filesystem::remove_all(dir);
}

TEST_CASE("scaling report") {
  const std::vector<double> Ts{1.0e3, 1.0e4, 1.0e5};
  const auto rep = scaling_report(Ts, 1.0, 0.0, Target::zeta, 20, {}, {}, ZML_CACHE_DIR);
  CHECK(rep.exponent == 1.0);
  CHECK(std::abs(rep.slope - 1.0) <= 0.5);
  for (const auto& r : rep.rows) {
    CHECK(r.ratio_to_conjectured_power() > 0.0);
    CHECK(std::isfinite(r.ratio_to_conjectured_power()));
  }
  CHECK(kind_of([&] { scaling_report(std::span<const MomentEstimate>(rep.rows).first(2)); }) == ErrorKind::config);

  std::ostringstream os;
  write_moments_csv(os, rep.rows);
  CHECK(os.str().rfind("T,k,h,target,value,mesh,panels,est_rel_error,ratio_to_conjectured_power\n", 0) == 0);
}
