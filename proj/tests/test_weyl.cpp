#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "revlab/weyl.hpp"

using namespace revlab;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

const SpectralTable& sphere40() {
  static const SpectralTable t = analytic_spectrum(RoundSphere{}, 40.0);
  return t;
}
const SpectralTable& flat40() {
  static const SpectralTable t = analytic_spectrum(FlatTorus{1.0, 2.0 * kPi}, 40.0);
  return t;
}
const SpectralTable& bridge20() {
  static const SpectralTable t = assemble_spectral_table(build_bridge_metric({}), 20.0, 1024);
  return t;
}

}  // namespace

TEST_CASE("sup-norm functional oracles") {
  SUBCASE("sphere pole, ℓ = 10") {
    const SupNormResult r = sup_norm_functional(sphere40(), {0.0, 0.0}, std::sqrt(110.0));
    CHECK(r.value == Approx(1.2927207364566027).epsilon(1e-12));
  }
  SUBCASE("flat torus, λ = 5 has 12 lattice points") {
    const SupNormResult r = sup_norm_functional(flat40(), {0.7, 1.9}, 5.0);
    CHECK(r.value == Approx(0.5513288954217921).epsilon(1e-12));
    CHECK(r.coefficients.size() == 12);
  }
  SUBCASE("λ = 0 gives 1/sqrt(Area)") {
    CHECK(sup_norm_functional(flat40(), {0.0, 0.0}, 0.0).value == Approx(1.0 / (2.0 * kPi)));
    CHECK(sup_norm_functional(sphere40(), {1.0, 0.0}, 0.0).value ==
          Approx(1.0 / std::sqrt(4.0 * kPi)));
  }
  CHECK_THROWS_AS(sup_norm_functional(sphere40(), {0.0, 0.0}, 1.0), NoClusterError);
}

TEST_CASE("sup-norm functional is the maximum over the eigenspace") {
  // Random unit coefficient vectors never beat the formula; the returned
  // coefficients attain it.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const SpectralTable& t = bridge20();
  for (std::size_t c = 0; c < t.clusters.size(); c += 7) {
    const EigenCluster& cluster = t.clusters[c];
    const SurfacePoint p{0.3, 1.1};
    const SupNormResult best = sup_norm_functional(t, p, cluster.lambda);
    std::complex<double> attained = 0.0;
    for (std::size_t k = 0; k < cluster.count; ++k) {
      attained += best.coefficients[k] * t.value(cluster.first + k, p.x, p.theta);
    }
    CHECK(std::abs(std::abs(attained) - best.value) <= 1e-8);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::complex<double>> v(cluster.count);
      double norm = 0.0;
      for (auto& z : v) {
        z = {g(rng), g(rng)};
        norm += std::norm(z);
      }
      std::complex<double> value = 0.0;
      for (std::size_t k = 0; k < cluster.count; ++k) {
        value += v[k] / std::sqrt(norm) * t.value(cluster.first + k, p.x, p.theta);
      }
      CHECK(std::abs(value) <= best.value + 1e-12);
    }
  }
}

TEST_CASE("local Weyl series") {
  const std::vector<double> grid = jump_grid(sphere40(), 0.0, 40.0);
  const WeylSeries s = local_weyl_series(sphere40(), {0.0, 0.0}, grid);
  REQUIRE(s.lambdas.size() == grid.size());
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
    CHECK(s.R[i] == Approx(s.E[i] - s.main[i]));
    CHECK(s.main[i] == Approx(s.lambdas[i] * s.lambdas[i] / (4.0 * kPi)));
  }
  // At the pole only zonal harmonics contribute: E(√(ℓ(ℓ+1))) = Σ (2k+1)/(4π) = (ℓ+1)²/(4π).
  const WeylSeries at = local_weyl_series(sphere40(), {0.0, 0.0}, {std::sqrt(30.0 * 31.0)});
  CHECK(at.E[0] == Approx(31.0 * 31.0 / (4.0 * kPi)).epsilon(1e-12));
  const WeylSeries below = local_weyl_series(sphere40(), {0.0, 0.0}, {std::sqrt(30.0 * 31.0) - 1e-6});
  CHECK(below.E[0] == Approx(30.0 * 30.0 / (4.0 * kPi)).epsilon(1e-12));

  CHECK_THROWS_AS(local_weyl_series(sphere40(), {0.0, 0.0}, {41.0}), Error);
  CHECK_THROWS_AS(local_weyl_series(sphere40(), {0.0, 0.0}, {-1.0}), Error);
  CHECK(weyl_csv(s).rfind("lambda,E,main,R\n", 0) == 0);
}

TEST_CASE("jump grid brackets every cluster") {
  const std::vector<double> grid = jump_grid(flat40(), 3.0, 6.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (const EigenCluster& c : flat40().clusters) {
    if (c.lambda < 3.0 || c.lambda > 6.0) continue;
    CHECK(std::find(grid.begin(), grid.end(), c.lambda) != grid.end());
  }
}

TEST_CASE("growth exponent fit") {
  std::vector<std::pair<double, double>> power, constant;
  for (int l = 2; l <= 100; ++l) {
    power.push_back({double(l), 3.0 * std::sqrt(double(l))});
    constant.push_back({double(l), 2.5});
  }
  const GrowthFit p = growth_exponent_fit(power);
  CHECK(p.exponent == Approx(0.5).epsilon(1e-6));
  CHECK(std::exp(p.intercept) == Approx(3.0).epsilon(1e-6));
  CHECK(p.residual < 1e-10);
  CHECK(std::abs(growth_exponent_fit(constant).exponent) < 1e-6);

  CHECK_THROWS_AS(growth_exponent_fit({}), Error);
  CHECK_THROWS_AS(growth_exponent_fit({{1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}}), Error);
  CHECK_THROWS_AS(growth_exponent_fit({{1.0, 0.0}, {2.0, 1.0}, {3.0, 1.0}}), Error);
  CHECK_THROWS_AS(growth_exponent_fit({{1.0, 1.0}, {1.01, 2.0}}), Error);
  CHECK_THROWS_AS(growth_exponent_fit(power, 0), Error);

  const nlohmann::json j = fit_summary(p);
  CHECK(j.at("exponent").get<double>() == p.exponent);
}

TEST_CASE("sphere pole: zonal saturation and remainder blow-up") {
  std::vector<std::pair<double, double>> sup;
  for (const EigenCluster& c : sphere40().clusters) {
    if (c.lambda <= 0.0 || c.lambda > std::sqrt(30.0 * 31.0) + 1e-9) continue;
    sup.push_back({c.lambda, sup_norm_functional(sphere40(), {0.0, 0.0}, c.lambda).value});
  }
  CHECK(std::abs(growth_exponent_fit(sup).exponent - 0.5) <= 0.05);

  const std::vector<double> grid = jump_grid(sphere40(), 0.0, 40.0);
  const WeylSeries s = local_weyl_series(sphere40(), {0.0, 0.0}, grid);
  std::vector<std::pair<double, double>> r;
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
    if (s.lambdas[i] >= 5.0 && s.R[i] != 0.0) r.push_back({s.lambdas[i], std::abs(s.R[i])});
  }
  CHECK(growth_exponent_fit(r).exponent >= 0.9);
}

TEST_CASE("flat torus remainder grows slower than λ") {
  const std::vector<double> grid = jump_grid(flat40(), 10.0, 40.0);
  const WeylSeries s = local_weyl_series(flat40(), {0.4, 0.2}, grid);
  std::vector<std::pair<double, double>> r;
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
    if (s.R[i] != 0.0) r.push_back({s.lambdas[i], std::abs(s.R[i])});
  }
  CHECK(growth_exponent_fit(r).exponent <= 0.8);
}

TEST_CASE("return-time measure") {
  SUBCASE("flat torus at T = 1 is close to uniform") {
    // Direct lattice sum over k² + m² ≤ 1600.
    const ReturnMeasure mu = return_time_measure(flat40(), {1.0, 2.0}, 1.0, 40.0, 5);
    CHECK(mu.max_nonzero == Approx(0.04892411762123308).epsilon(1e-9));
    CHECK(mu.max_nonzero <= 0.15);
  }
  SUBCASE("sphere pole at T = 2π concentrates at θ = π") {
    const ReturnMeasure mu = return_time_measure(sphere40(), {0.0, 0.0}, 2.0 * kPi, 40.0, 3);
    CHECK(mu.at(1).real() == Approx(-0.9973296735340188).epsilon(1e-10));
    CHECK(mu.at(1).imag() == Approx(0.03825010217206049).epsilon(1e-9));
    CHECK(mu.at(2).real() == Approx(0.9944225581403848).epsilon(1e-10));
    CHECK(std::abs(mu.at(1) + 1.0) <= 0.15);
  }
  SUBCASE("normalization, Hermitian symmetry, |μ̂| ≤ 1") {
    for (const SpectralTable* t : {&flat40(), &sphere40(), &bridge20()}) {
      for (double T : {0.5, 1.0, 2.0 * kPi, 9.3}) {
        const ReturnMeasure mu = return_time_measure(*t, {0.3, 0.0}, T, 20.0, 6);
        CHECK(mu.at(0) == std::complex<double>(1.0, 0.0));
        for (int k = 1; k <= 6; ++k) {
          CHECK(mu.at(-k) == std::conj(mu.at(k)));
          CHECK(std::abs(mu.at(k)) <= 1.0 + 1e-12);
        }
      }
    }
  }
  CHECK_THROWS_AS(return_time_measure(flat40(), {0.0, 0.0}, 1.0, 40.0, 0), Error);
  CHECK_THROWS_AS(return_time_measure(flat40(), {0.0, 0.0}, 1.0, 41.0, 3), Error);
}

TEST_CASE("trace identity and global Weyl law") {
  for (const SpectralTable* t : {&flat40(), &sphere40(), &bridge20()}) {
    for (double lambda : {5.0, 10.0, 20.0}) {
      const GlobalWeyl g = global_weyl(*t, {lambda});
      CHECK(std::abs(integrated_local_weyl(*t, lambda) - g.N[0]) <= 1e-6 * g.N[0]);
    }
  }
  // Lattice points in the disk of radius 10, 20, 30.
  const GlobalWeyl g = global_weyl(flat40(), {5.0, 10.0, 20.0, 30.0});
  CHECK(g.N[0] == 81);
  CHECK(g.N[1] == 317);
  CHECK(g.N[2] == 1257);
  CHECK(g.N[3] == 2821);
  CHECK(g.main[3] == Approx(4.0 * kPi * kPi * 900.0 / (4.0 * kPi)));
  CHECK(std::abs(g.N[3] / g.main[3] - 1.0) < 0.2);
}
