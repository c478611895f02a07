#include "selftest.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>

#include "zml/critline.hpp"
#include "zml/dirpoly.hpp"
#include "zml/inequality.hpp"
#include "zml/moments.hpp"
#include "zml/primes.hpp"
#include "zml/rng.hpp"
#include "zml/twisted.hpp"

namespace zml::cli {

namespace {

enum Stream : std::uint64_t { kIdentity = 1, kOracle, kEuler, kInterp };

void add(std::vector<SelftestRow>& rows, std::string name, double value, double tol, bool pass) {
  rows.push_back({std::move(name), value, tol, pass});
}

void add_below(std::vector<SelftestRow>& rows, std::string name, double value, double tol) {
  add(rows, std::move(name), value, tol, value < tol);
}

// Random multiplicative polynomial on `primes`, exponents up to 2.
DirichletPoly random_multiplicative(const CounterRng& rng, std::uint64_t& ctr,
                                    std::span<const std::uint64_t> primes,
                                    std::vector<DirichletPoly>& factors) {
  factors.clear();
  for (std::uint64_t p : primes) {
    std::vector<std::pair<std::uint64_t, cplx>> terms{{1, 1.0}};
    std::uint64_t pm = 1;
    for (int m = 1; m <= 2; ++m) {
      pm *= p;
      terms.emplace_back(pm, cplx(rng.uniform(ctr, -1.0, 1.0), rng.uniform(ctr + 1, -1.0, 1.0)));
      ctr += 2;
    }
    factors.push_back(DirichletPoly::from_terms(terms));
  }
  return poly_product(std::span<const DirichletPoly>(factors));
}

}  // namespace

std::vector<SelftestRow> run_selftest(std::uint64_t seed, Parallel par) {
  std::vector<SelftestRow> rows;
  const EvalAccuracy acc;

  {
    const auto table = sieve_primes(1'000'000);
    add(rows, "prime_count_1e6", static_cast<double>(table.size()), 0.0, table.size() == 78498);
  }

  {
    const CounterRng rng(seed, kIdentity);
    double worst_abs = 0.0, worst_rel = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
      const double t = rng.uniform(i, 50.0, 5000.0);
      const auto s = critical_sample(t, acc);
      const auto em = zeta_em(cplx(0.5, t), acc);
      worst_abs = std::max(worst_abs, std::abs(std::abs(s.Z) - std::abs(em.zeta)));
      if (std::abs(s.Z) > 1.0e-3) {
        const double dz = std::norm(em.zeta_prime);
        worst_rel = std::max(worst_rel, std::abs(s.abs_zeta_prime_sq() - dz) / dz);
      }
    }
    add_below(rows, "abs_Z_equals_abs_zeta", worst_abs, 1.0e-8);
    add_below(rows, "zeta_prime_identity_rel", worst_rel, 1.0e-6);
  }

  {
    const CounterRng rng(seed, kOracle);
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
      const double t = rng.uniform(i, 100.0, 1.0e4);
      worst = std::max(worst, std::abs(hardy_Z(t, acc).Z - hardy_Z_oracle(t, acc).Z));
    }
    add_below(rows, "rs_vs_em_Z", worst, 1.0e-6);

    int changes = 0;
    double prev = critical_sample(10.0, acc).Z;
    for (int i = 1; i <= 18000; ++i) {
      const double z = critical_sample(10.0 + 0.005 * i, acc).Z;
      if ((z > 0.0) != (prev > 0.0)) ++changes;
      prev = z;
    }
    add(rows, "Z_sign_changes_0_100", changes, 0.0, changes == 29);
  }

  {
    const double limit = scheme_prime_limit(std::log(1.0e5), 0.8);
    const auto s = build_scheme(1.0e5, 0.8, sieve_primes(static_cast<std::uint64_t>(limit) + 1));
    add(rows, "scheme_ell_T1e5", s.ell, 0.0, s.ell >= 2);
    const std::array<std::uint64_t, 2> range{11, 13};
    const auto n = build_truncated_exp(range, 0.5, 6);
    // 11^2 * 13: alpha^3 / 2!
    const double c = n.coeff(11 * 11 * 13).real();
    add_below(rows, "Nj_coefficient_11_11_13", std::abs(c - 0.0625), 1.0e-15);
  }

  {
    const CounterRng rng(seed, kEuler);
    std::uint64_t ctr = 0;
    const std::array<std::uint64_t, 3> primes{2, 3, 5};
    std::vector<DirichletPoly> factors;
    double worst_f = 0.0, worst_g = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
      const auto A = random_multiplicative(rng, ctr, primes, factors);
      const cplx z1(rng.uniform(ctr, -0.2, 0.2), rng.uniform(ctr + 1, -0.2, 0.2));
      const cplx z2(rng.uniform(ctr + 2, -0.2, 0.2), rng.uniform(ctr + 3, -0.2, 0.2));
      ctr += 4;
      cplx prod = 1.0;
      for (const auto& f : factors) prod *= f_sum(f, z1, z2);
      worst_f = std::max(worst_f, std::abs(f_sum(A, z1, z2, kDefaultPairCap, par) - prod) / std::abs(prod));

      const Shifts z{z1, z2, 0.5 * z2, 0.5 * z1};
      cplx gprod = 1.0;
      for (const auto& f : factors) gprod *= g_sum(f, z);
      worst_g = std::max(worst_g, std::abs(g_sum(A, z) - gprod) / std::abs(gprod));
    }
    add_below(rows, "f_sum_euler_product", worst_f, 1.0e-12);
    add_below(rows, "g_sum_euler_product", worst_g, 1.0e-12);
  }

  {
    const auto grid = sample_moment_grid(1.0e3, 20, acc, par);
    const auto m = joint_moment(grid, 1.0, 0.0, Target::zeta);
    const double ratio = m.value / (1.0e3 * std::log(1.0e3));
    add_below(rows, "second_moment_T1e3_ratio_dev", std::abs(ratio - 1.0), 0.3);
    const auto m0 = joint_moment(grid, 1.5, 0.0, Target::zeta);
    const auto m1 = joint_moment(grid, 1.5, 1.0, Target::zeta);
    const auto mh = joint_moment(grid, 1.5, 0.5, Target::zeta);
    const auto hr = verify_holder(m0, m1, mh, 0.5);
    add(rows, "holder_T1e3_k1.5_h0.5_slack", hr.slack / hr.rhs, hr.tol, hr.pass);
  }

  {
    const auto table = sieve_primes(100);
    const std::array<double, 4> bounds{std::exp(2.0), 12.0, 14.0, 20.0};
    InterpolationConfig cfg;
    cfg.k = 1.5;
    cfg.scheme = custom_scheme(1.0e4, bounds, table);
    cfg.c_omega = 100.0;
    const CounterRng rng(seed, kInterp);
    std::vector<double> ts(200);
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = rng.uniform(i, 1.0e4, 1.1e4);
    const auto rep = check_interpolation(ts, cfg, Target::zeta, acc, par);
    add(rows, "interpolation_failures", static_cast<double>(rep.failures.size()), 0.0, rep.failures.empty());
  }

  {
    const double T = 1.0e3;
    const CutoffFn phi;
    const auto one = DirichletPoly::constant(1.0);
    const double l1 = lemma1_main(one, T, ShiftConfig::standard(std::log(T), 64), phi, Target::zeta, par).value;
    const double l1b = lemma1_main(one, T, ShiftConfig::standard(std::log(T), 128), phi, Target::zeta, par).value;
    add_below(rows, "lemma1_node_doubling", std::abs(l1b / l1 - 1.0), 1.0e-6);
    const auto grid = twisted_grid(T, mean_zero_gap(T) / 20.0, acc, par);
    const double direct = twisted_direct(one, grid, T, TwistWeight::dzeta2, phi, par);
    add_below(rows, "lemma1_direct_ratio_dev", std::abs(direct / l1 - 1.0), 0.4);
    const double l2 = lemma2_main(one, T, ShiftConfig::contracted(std::log(T), 32), phi, Target::zeta,
                                  Lemma2Weight::derived, {}, par).value;
    const double l2b = lemma2_main(one, T, ShiftConfig::contracted(std::log(T), 64), phi, Target::zeta,
                                   Lemma2Weight::derived, {}, par).value;
    add_below(rows, "lemma2_node_doubling", std::abs(l2b / l2 - 1.0), 1.0e-4);
  }

  {
    const std::array<std::uint64_t, 3> range{11, 13, 17};
    bool all = true;
    double worst = -1.0e300;
    for (int r = 0; r <= 4; ++r) {
      const auto rep = rankin_bound_check(range, r);
      all = all && rep.pass;
      worst = std::max(worst, rep.log_sum - rep.log_bound);
    }
    add(rows, "rankin_log_margin", worst, 0.0, all);
    const std::array<std::uint64_t, 2> small{11, 13};
    const double brute = cutoff_free_sum(small, 0.5, 16);
    const double euler = cutoff_free_euler_product(small, 0.5);
    add_below(rows, "cutoff_free_euler_identity", std::abs(brute - euler) / euler, 1.0e-10);
  }

  {
    const auto path = std::filesystem::temp_directory_path() /
                      fmt::format("zml_selftest_{}_{}.zml", seed, static_cast<long>(::getpid()));
    const auto g = sample_grid(1000.0, 1001.0, 0.05, acc, par);
    const auto recs = g.records();
    write_grid_cache(path, recs);
    const auto back = read_grid_cache(path);
    std::filesystem::remove(path);
    bool same = back.size() == recs.size();
    for (std::size_t i = 0; same && i < recs.size(); ++i)
      same = back[i].t == recs[i].t && back[i].Z == recs[i].Z && back[i].Z_prime == recs[i].Z_prime &&
             back[i].theta == recs[i].theta && back[i].theta_prime == recs[i].theta_prime;
    add(rows, "grid_cache_roundtrip", same ? 1.0 : 0.0, 0.0, same);
  }
  return rows;
}

void write_selftest_csv(std::ostream& os, const std::vector<SelftestRow>& rows) {
  os << "check,value,tolerance,pass\n";
  for (const auto& r : rows) fmt::print(os, "{},{},{},{}\n", r.check, r.value, r.tolerance, r.pass ? 1 : 0);
}

}  // namespace zml::cli
