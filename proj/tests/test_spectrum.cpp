#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "revlab/spectrum.hpp"

using namespace revlab;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

const ProfileMetric& flat() {
  static const ProfileMetric m = build_profile_metric(FlatTorus{1.0, 2.0 * kPi});
  return m;
}
const ProfileMetric& sphere() {
  static const ProfileMetric m = build_profile_metric(RoundSphere{});
  return m;
}
const ProfileMetric& bridge() {
  static const ProfileMetric m = build_bridge_metric({});
  return m;
}

double inner(const EquivariantMode& a, const EquivariantMode& b) {
  double s = 0.0;
  for (int i = 0; i < a.grid->size; ++i) s += a.grid->weight(i) * a.u[i] * b.u[i];
  return s;
}

}  // namespace

TEST_CASE("sphere zonal modes") {
  const auto modes = solve_equivariant_modes(sphere(), 0, 2048, 31.0);
  REQUIRE(modes.size() == 31);
  for (int l = 0; l <= 30; ++l) {
    const double exact = std::sqrt(l * (l + 1.0));
    CHECK(std::abs(modes[l].lambda - exact) <= 1e-3 * std::max(exact, 1.0));
    CHECK(modes[l].j == l);
  }
  // The constant mode.
  CHECK(modes[0].lambda == 0.0);
  CHECK(modes[0].u[100] == Approx(1.0 / std::sqrt(4.0 * kPi)).epsilon(1e-4));
  // Pointwise against the Legendre oracle P̄_10^0(cos x).
  for (double x : {0.3, 1.0, 2.0}) {
    CHECK(modes[10].value(x).real() == Approx(normalized_legendre(10, 0, std::cos(x))).epsilon(1e-3));
  }
}

TEST_CASE("flat torus n = 3 eigenvalues are sqrt(k² + 9)") {
  const auto modes = solve_equivariant_modes(flat(), 3, 1024, 4.3);
  REQUIRE(modes.size() == 7);
  const double expected[] = {3.0, 3.1622776601683795, 3.1622776601683795, 3.605551275463989,
                             3.605551275463989, 4.242640687119285, 4.242640687119285};
  for (int k = 0; k < 7; ++k) CHECK(modes[k].lambda == Approx(expected[k]).epsilon(1e-4));
}

TEST_CASE("n = 0 ground state is the constant 1/sqrt(Area)") {
  for (const ProfileMetric* m : {&flat(), &bridge()}) {
    const auto modes = solve_equivariant_modes(*m, 0, 512, 1.0);
    REQUIRE(!modes.empty());
    CHECK(modes[0].lambda == 0.0);
    for (double u : modes[0].u) CHECK(u == Approx(1.0 / std::sqrt(m->area())).epsilon(1e-6));
  }
}

TEST_CASE("orthonormality and residuals") {
  for (const ProfileMetric* m : {&sphere(), &bridge(), &flat()}) {
    for (int n : {0, 1, 5}) {
      const auto modes = solve_equivariant_modes(*m, n, 1024, 15.0);
      for (std::size_t a = 0; a < modes.size(); ++a) {
        CHECK(modes[a].residual <= 1e-6);
        CHECK(modes[a].norm_check <= 1e-6);
        for (std::size_t b = 0; b < modes.size(); ++b) {
          CHECK(std::abs(inner(modes[a], modes[b]) - (a == b ? 1.0 : 0.0)) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("phase convention: positive at the first extremum") {
  const auto modes = solve_equivariant_modes(bridge(), 2, 1024, 10.0);
  for (const EquivariantMode& mode : modes) {
    // Scan from x = 0; samples outside the grid count as zero.
    const auto mag = [&](std::size_t k) { return k < mode.u.size() ? std::abs(mode.u[k]) : 0.0; };
    std::size_t i = 0;
    while (i < mode.u.size() && !(mag(i) > 0.0 && mag(i) >= (i ? mag(i - 1) : 0.0) && mag(i) >= mag(i + 1))) ++i;
    REQUIRE(i < mode.u.size());
    CHECK(mode.u[i] > 0.0);
  }
}

TEST_CASE("grid convergence check") {
  SolverOptions options;
  options.check_convergence = true;
  CHECK_NOTHROW(solve_equivariant_modes(bridge(), 3, 1024, 10.0, options));
  options.accuracy_target = 1e-12;
  CHECK_THROWS_AS(solve_equivariant_modes(bridge(), 3, 256, 20.0, options), SolverError);
}

TEST_CASE("solver input validation") {
  CHECK_THROWS_AS(solve_equivariant_modes(flat(), 0, 64, 5.0), SolverError);
  CHECK_THROWS_AS(solve_equivariant_modes(flat(), 0, 256, -1.0), SolverError);
  CHECK_THROWS_AS(assemble_spectral_table(flat(), 0.0, 256), SolverError);
}

TEST_CASE("spectral table counts") {
  SUBCASE("round sphere, ℓ ≤ 10") {
    const SpectralTable t = assemble_spectral_table(sphere(), std::sqrt(110.0) + 0.01, 1024);
    CHECK(t.entries.size() == 121);
  }
  SUBCASE("flat torus λ ≤ 5: 81 lattice points") {
    const SpectralTable t = assemble_spectral_table(flat(), 5.0 + 1e-3, 1024);
    CHECK(t.entries.size() == 81);
    const SpectralTable exact = analytic_spectrum(FlatTorus{1.0, 2.0 * kPi}, 5.0);
    CHECK(exact.entries.size() == 81);
  }
  SUBCASE("below the first eigenvalue only the constant") {
    const SpectralTable t = assemble_spectral_table(sphere(), 0.5, 512);
    REQUIRE(t.entries.size() == 1);
    CHECK(t.entries[0].lambda == 0.0);
  }
}

TEST_CASE("table ordering, ±n pairing and clusters") {
  const SpectralTable t = assemble_spectral_table(bridge(), 12.0, 1024);
  for (std::size_t i = 1; i < t.entries.size(); ++i) {
    CHECK(t.entries[i - 1].lambda <= t.entries[i].lambda + t.cluster_tolerance(t.entries[i].lambda));
  }
  int plus = 0, minus = 0;
  for (const SpectralEntry& e : t.entries) {
    plus += e.n > 0;
    minus += e.n < 0;
  }
  CHECK(plus == minus);
  std::size_t covered = 0;
  for (const EigenCluster& c : t.clusters) {
    CHECK(c.hi - c.lo <= c.count * t.cluster_tolerance(c.hi));
    CHECK(t.find_cluster(c.lambda) == &c);
    covered += c.count;
  }
  CHECK(covered == t.entries.size());
  CHECK(t.find_cluster(t.clusters[3].lambda + 0.5 * (t.clusters[4].lambda - t.clusters[3].lambda)) == nullptr);
  // The n_max cutoff certifies completeness: λ ≥ |n|/max(a).
  CHECK(t.n_max == static_cast<int>(std::ceil(12.0 * bridge().max_a())));
}

TEST_CASE("numeric tables agree with the closed-form spectra") {
  SUBCASE("sphere") {
    const SpectralTable t = assemble_spectral_table(sphere(), 30.0, 2048);
    for (const SpectralEntry& e : t.entries) {
      const double l = std::round(0.5 * (std::sqrt(1.0 + 4.0 * e.lambda * e.lambda) - 1.0));
      const double exact = std::sqrt(l * (l + 1.0));
      CHECK(std::abs(e.lambda - exact) <= 1e-3 * std::max(exact, 1.0));
    }
  }
  SUBCASE("flat torus") {
    const SpectralTable numeric = assemble_spectral_table(flat(), 30.06, 2048);
    const SpectralTable exact = analytic_spectrum(FlatTorus{1.0, 2.0 * kPi}, 30.0);
    REQUIRE(numeric.entries.size() >= exact.entries.size());
    for (std::size_t i = 0; i < exact.entries.size(); ++i) {
      const double e = exact.entries[i].lambda;
      CHECK(std::abs(numeric.entries[i].lambda - e) <= 1e-3 * std::max(e, 1.0));
    }
    // Pointwise modes for a plane wave with k = 0: |u| = 1/(2π).
    const SpectralEntry& first_n2 = *std::find_if(numeric.entries.begin(), numeric.entries.end(),
                                                  [](const SpectralEntry& e) { return e.n == 2 && e.j == 0; });
    CHECK(std::abs(first_n2.mode->value(1.3)) == Approx(1.0 / (2.0 * kPi)).epsilon(1e-3));
  }
}

TEST_CASE("analytic spectra") {
  const SpectralTable flat_t = analytic_spectrum(FlatTorus{1.0, 2.0 * kPi}, 5.0);
  const EigenCluster* five = flat_t.find_cluster(5.0);
  REQUIRE(five != nullptr);
  CHECK(five->count == 12);
  CHECK(five->lambda == 5.0);
  const SpectralTable sph = analytic_spectrum(RoundSphere{}, 40.0);
  for (int l = 0; l <= 39; ++l) {
    const EigenCluster* c = sph.find_cluster(std::sqrt(l * (l + 1.0)));
    REQUIRE(c != nullptr);
    CHECK(c->count == static_cast<std::size_t>(2 * l + 1));
  }
  CHECK_THROWS_AS(analytic_spectrum(FlatTorus{0.0, 1.0}, 5.0), Error);
  CHECK_THROWS_AS(analytic_spectrum(RoundSphere{}, -2.0), Error);
}

TEST_CASE("normalized Legendre functions") {
  // scipy.special.sph_harm_y at φ = 0 with the Condon–Shortley sign removed.
  CHECK(normalized_legendre(5, 2, 0.3) == Approx(-0.3377509491120646).epsilon(1e-12));
  CHECK(normalized_legendre(10, 0, 1.0) == Approx(1.2927207364566056).epsilon(1e-12));
  CHECK(normalized_legendre(7, 7, 0.5) == Approx(0.1826916883380199).epsilon(1e-12));
  CHECK(normalized_legendre(30, 3, -0.2) == Approx(-0.054889035962120455).epsilon(1e-11));
  CHECK(normalized_legendre(40, -17, 0.8) == Approx(-0.40745297772373623).epsilon(1e-11));
  CHECK(normalized_legendre(3, 4, 0.1) == 0.0);
}

TEST_CASE("Gauss–Legendre nodes") {
  std::vector<double> x, w;
  gauss_legendre(5, x, w);
  REQUIRE(x.size() == 5);
  CHECK(x[0] == Approx(-0.906179845938664).epsilon(1e-14));
  CHECK(w[0] == Approx(0.23692688505618942).epsilon(1e-14));
  CHECK(std::abs(x[2]) < 1e-15);
  CHECK(w[2] == Approx(0.568888888888889).epsilon(1e-14));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 8);
  CHECK(s == Approx(2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("mode statistics") {
  SUBCASE("plane wave has constant modulus") {
    const SpectralTable t = analytic_spectrum(FlatTorus{1.0, 2.0 * kPi}, 5.0);
    const ModeStatistics s = mode_statistics(t.entries[7], t.quadrature);
    CHECK(s.sup_norm == Approx(1.0 / (2.0 * kPi)));
    CHECK(s.lp_norms.at(2) == Approx(1.0));
    const double area = 4.0 * kPi * kPi;
    CHECK(s.lp_norms.at(4) == Approx(std::pow(area, 0.25 - 0.5)));
    CHECK(s.lp_norms.at(6) == Approx(std::pow(area, 1.0 / 6.0 - 0.5)));
  }
  SUBCASE("zonal ℓ = 10 peaks at the poles") {
    const SpectralTable t = analytic_spectrum(RoundSphere{}, 11.0);
    Quadrature q = t.quadrature;
    q.x.push_back(0.0);
    q.weight.push_back(0.0);
    const auto zonal = std::find_if(t.entries.begin(), t.entries.end(),
                                    [](const SpectralEntry& e) { return e.n == 0 && e.j == 10; });
    REQUIRE(zonal != t.entries.end());
    const ModeStatistics s = mode_statistics(*zonal, q);
    CHECK(s.sup_norm == Approx(1.2927207364566027).epsilon(1e-12));
    CHECK(s.argmax_x == 0.0);
    CHECK(s.lp_norms.at(2) == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("coarse grids are flagged") {
    const SpectralTable t = analytic_spectrum(RoundSphere{}, 40.0);
    const ModeStatistics s = mode_statistics(t.entries.back(), uniform_quadrature(sphere(), 32));
    CHECK(!s.warnings.empty());
  }
}

TEST_CASE("L^p exponents in two dimensions") {
  CHECK(lp_exponent(0.0) == 0.5);
  CHECK(lp_exponent(INFINITY) == 0.5);
  CHECK(lp_exponent(6.0) == Approx(1.0 / 6.0));
  CHECK(lp_exponent(4.0) == Approx(1.0 / 8.0));
  CHECK(lp_exponent(2.0) == 0.0);
  CHECK(lp_exponent(12.0) == Approx(0.5 - 2.0 / 12.0));
  CHECK_THROWS_AS(lp_exponent(1.5), Error);
}
