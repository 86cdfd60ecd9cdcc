#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <numbers>
#include <sstream>

#include "revlab/lab.hpp"

using namespace revlab;
using namespace revlab::lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("revlab-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

const Check* find_check(const ScenarioReport& report, const std::string& name) {
  for (const Check& c : report.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("scenario names") {
  const auto names = scenario_names();
  CHECK(names == std::vector<std::string>{"flat-torus", "round-sphere", "bridge-torus",
                                          "perturbed-torus", "custom"});
  for (const auto& n : names) CHECK(to_string(scenario_from_string(n)) == n);
  CHECK_THROWS_AS(scenario_from_string("klein-bottle"), ConfigError);
}

TEST_CASE("config parsing") {
  const ScenarioConfig c = parse_config(
      "scenario: bridge-torus\n"
      "lambda_max: 30\n"
      "grid_size: 1024\n"
      "band_profile: paper-sqrt\n"
      "evaluation_points:\n"
      "  - {name: band, x: 0.0}\n"
      "  - {name: flat, x: 4.0, theta: 1.0}\n"
      "return_times: [1.0, 2.5]\n"
      "cache_policy: off\n");
  CHECK(c.scenario == Scenario::BridgeTorus);
  CHECK(c.lambda_max == 30.0);
  CHECK(c.grid_size == 1024);
  CHECK(c.band_profile == "paper-sqrt");
  REQUIRE(c.evaluation_points.size() == 2);
  CHECK(c.evaluation_points[1].theta == 1.0);
  CHECK(c.return_times == std::vector<double>{1.0, 2.5});
  CHECK(c.cache_policy == CachePolicy::Off);
  // Untouched fields keep the scenario defaults.
  CHECK(c.fit_lambda_min == 10.0);
  CHECK(c.band_half_width == 0.25);
}

TEST_CASE("bridge default evaluation points follow the geometry") {
  const ScenarioConfig c = parse_config("scenario: bridge-torus\nflat_length: 8.0\n");
  REQUIRE(c.evaluation_points.size() == 3);
  CHECK(c.evaluation_points[0].name == "band");
  CHECK(c.evaluation_points[2].x == doctest::Approx(0.25 + 0.25 + 4.0));
}

TEST_CASE("config validation names the offending field") {
  CHECK(config_error_field("scenario: bridge-torus\nflat_length: 1\n") == "flat_length");
  CHECK(config_error_field("scenario: flat-torus\nlambda_max: 80\n") == "lambda_max");
  CHECK(config_error_field("scenario: flat-torus\nlambda_max: 80\nallow_above_ceiling: true\n"
                           "return_lambda: 40\n") == "");
  CHECK(config_error_field("scenario: flat-torus\nloop_tol: -1e-4\n") == "loop_tol");
  CHECK(config_error_field("scenario: flat-torus\ncluster_tol: 0\n") == "cluster_tol");
  CHECK(config_error_field("scenario: flat-torus\ngrid_size: 32\n") == "grid_size");
  CHECK(config_error_field("scenario: flat-torus\nlambda_mx: 30\n") == "lambda_mx");
  CHECK(config_error_field("lambda_max: 30\n") == "scenario");
  CHECK(config_error_field("scenario: moebius\n") == "scenario");
  CHECK(config_error_field("scenario: flat-torus\nlambda_max: [1, 2]\n") == "lambda_max");
  CHECK(config_error_field("scenario: round-sphere\nspectral_source: magic\n") == "spectral_source");
  CHECK(config_error_field("scenario: bridge-torus\nspectral_source: analytic\n") == "spectral_source");
  CHECK(config_error_field("scenario: perturbed-torus\nperturbation_amplitude: 0.2\n") ==
        "perturbation_amplitude");
  CHECK(config_error_field("scenario: custom\nfourier_alpha: [0.1, 0.2]\nfourier_beta: [0]\n") ==
        "fourier_beta");
  CHECK(config_error_field("scenario: custom\nfourier_alpha: [2.0]\nfourier_beta: [0]\n") ==
        "fourier_alpha");
  CHECK(config_error_field("scenario: flat-torus\nevaluation_points:\n  - {name: A B, x: 0}\n") ==
        "evaluation_points");
  CHECK(config_error_field("scenario: flat-torus\nreturn_lambda: 50\n") == "return_lambda");
  CHECK(config_error_field("scenario: [flat-torus\n") == "<file>");
}

TEST_CASE("config hash") {
  ScenarioConfig a = default_config(Scenario::FlatTorus);
  ScenarioConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);
  b.output_dir = "elsewhere";
  b.cache_policy = CachePolicy::Off;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 8;
  CHECK(config_hash(a) != config_hash(b));
  // Known SHA-256 test vector.
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("random base points are seeded") {
  const ScenarioConfig c = default_config(Scenario::PerturbedTorus);
  const auto p = resolved_base_points(c);
  REQUIRE(p.size() == 5);
  CHECK(p[0].name == "random0");
  const auto again = resolved_base_points(c);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i].x == again[i].x);
  ScenarioConfig other = c;
  other.seed = 99;
  CHECK(resolved_base_points(other)[0].x != p[0].x);
}

TEST_CASE("spectral cache round trip") {
  const fs::path dir = scratch("cache");
  const ProfileMetric metric = build_bridge_metric({});
  const SpectralTable table = assemble_spectral_table(metric, 8.0, 256);
  SpectralCache cache{dir};
  CHECK(!cache.load(metric, 8.0, 256, 1e-6).has_value());
  cache.store(table, metric);
  const auto loaded = cache.load(metric, 8.0, 256, 1e-6);
  REQUIRE(loaded.has_value());
  CHECK(table_hash(*loaded) == table_hash(table));
  REQUIRE(loaded->entries.size() == table.entries.size());
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    CHECK(loaded->entries[i].lambda == table.entries[i].lambda);
    CHECK(loaded->value(i, 0.7, 0.2) == table.value(i, 0.7, 0.2));
  }
  // Different solver parameters, different key.
  CHECK(SpectralCache::key(metric, 8.0, 512, 1e-6) != SpectralCache::key(metric, 8.0, 256, 1e-6));
  CHECK(!cache.load(metric, 8.0, 512, 1e-6).has_value());

  // A tampered entry is rejected rather than trusted.
  const fs::path csv = dir / SpectralCache::key(metric, 8.0, 256, 1e-6) / "modes.csv";
  std::string text = slurp(csv);
  const auto pos = text.find(",0.", text.find('\n') + 1);
  REQUIRE(pos != std::string::npos);
  text[pos + 3] = text[pos + 3] == '1' ? '2' : '1';
  std::ofstream(csv, std::ios::binary) << text;
  CHECK(!cache.load(metric, 8.0, 256, 1e-6).has_value());

  SpectralTable analytic = analytic_spectrum(RoundSphere{}, 5.0);
  CHECK_THROWS_AS(cache.store(analytic, build_profile_metric(RoundSphere{})), Error);
}

TEST_CASE("checks") {
  CHECK(make_check("a", "", 0.1, "<=", 0.2).passed);
  CHECK(!make_check("a", "", 0.3, "<=", 0.2).passed);
  CHECK(make_check("a", "", 0.3, ">=", 0.2).passed);
  CHECK(!make_check("a", "", 0.05, "<", 0.05).passed);
  CHECK(make_check("a", "", 6.3, "within", 0.1, 6.28).passed);
  CHECK(!make_check("a", "", 6.5, "within", 0.1, 6.28).passed);
  CHECK(!make_check("a", "", std::nan(""), "<=", 1.0).passed);
  CHECK(!make_check("a", "", 0.0, "~", 1.0).passed);
}

TEST_CASE("flat torus scenario, export, determinism and verify") {
  const fs::path out = scratch("flat");
  ScenarioConfig config = default_config(Scenario::FlatTorus);
  config.output_dir = out.string();
  config.n_directions = 512;
  const ScenarioReport report = run_scenario(config);
  CHECK(report.failures.empty());
  CHECK(report.table_source == "analytic");

  const Check* mu = find_check(report, "mu.T1.0000.origin");
  REQUIRE(mu != nullptr);
  CHECK(mu->passed);
  CHECK(mu->bound == 0.15);
  const Check* remainder = find_check(report, "remainder.origin");
  REQUIRE(remainder != nullptr);
  CHECK(remainder->passed);
  CHECK(find_check(report, "trace.identity")->passed);
  for (const Check& c : report.checks) CHECK(!c.op.empty());

  const fs::path dir = export_report(report);
  CHECK(dir.filename().string() == "flat-torus-" + report.config_hash.substr(0, 12));
  for (const char* f : {"summary.json", "weyl_origin.csv", "supnorm.csv", "supnorm_fit.json",
                        "mu_T1.0000.csv", "mu_T6.2832.csv", "loopset_origin.csv", "loopset_origin.json",
                        "remainder_origin.dat", "trace.csv", "flow.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  CHECK(!fs::exists(dir / "timings.json"));
  CHECK(slurp(dir / "weyl_origin.csv").rfind("lambda,E,main,R\n", 0) == 0);

  // Rerun: byte-identical files.
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(dir)) first[e.path().filename().string()] = slurp(e.path());
  export_report(run_scenario(config));
  for (const auto& [name, text] : first) CHECK_MESSAGE(slurp(dir / name) == text, name);

  const VerifyResult verified = verify_report(dir);
  CHECK(verified.mismatches.empty());
  CHECK(verified.checks.size() == report.checks.size());
  for (std::size_t i = 0; i < report.checks.size(); ++i) {
    CHECK(verified.checks[i].passed == report.checks[i].passed);
  }

  // Editing stored data is caught.
  // Editing stored data is caught: overwrite |μ̂(5)| in the last row.
  std::string mu_text = slurp(dir / "mu_T1.0000.csv");
  mu_text.pop_back();
  mu_text = mu_text.substr(0, mu_text.rfind(',') + 1) + "0.9\n";
  std::ofstream(dir / "mu_T1.0000.csv", std::ios::binary) << mu_text;
  const VerifyResult tampered = verify_report(dir);
  CHECK(!tampered.mismatches.empty());
  CHECK(!tampered.ok());
}

TEST_CASE("round sphere report naming") {
  const fs::path out = scratch("sphere");
  ScenarioConfig config = default_config(Scenario::RoundSphere);
  config.output_dir = out.string();
  config.n_directions = 256;
  const ScenarioReport report = run_scenario(config);
  CHECK(report.all_passed());
  const fs::path dir = export_report(report);
  for (const char* f : {"weyl_pole.csv", "supnorm_fit.json", "mu_T6.2832.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  CHECK(verify_report(dir).ok());
}

TEST_CASE("empty report exports only the summary") {
  const fs::path out = scratch("empty");
  ScenarioReport report;
  report.config = default_config(Scenario::FlatTorus);
  report.config.output_dir = out.string();
  report.config_hash = config_hash(report.config);
  const fs::path dir = export_report(report);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().filename().string());
  CHECK(files == std::vector<std::string>{"summary.json"});
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary.at("checks").empty());
  CHECK(verify_report(dir).ok());
}

TEST_CASE("perturbed torus, seed 7: generic base points have small loopsets") {
  const fs::path out = scratch("perturbed");
  ScenarioConfig config = default_config(Scenario::PerturbedTorus);
  config.output_dir = out.string();
  config.lambda_max = 10.0;
  config.return_lambda = 10.0;
  config.fit_lambda_min = 2.0;
  config.cache_policy = CachePolicy::Off;
  const ScenarioReport report = run_scenario(config);
  CHECK(report.failures.empty());
  int loopset_checks = 0;
  for (const Check& c : report.checks) {
    if (c.name.rfind("loopset.random", 0) == 0) {
      ++loopset_checks;
      CHECK(c.passed);
      CHECK(c.value < 0.05);
    }
  }
  CHECK(loopset_checks == 5);
}

TEST_CASE("downstream errors are carried into the report") {
  const fs::path out = scratch("broken");
  ScenarioConfig config = default_config(Scenario::Custom);
  config.output_dir = out.string();
  config.lambda_max = 6.0;
  config.return_lambda = 6.0;
  config.fit_lambda_min = 1.0;
  config.n_directions = 128;
  // A regular file where the cache directory should go.
  config.cache_dir = (out / "not-a-directory").string();
  std::ofstream(config.cache_dir) << "x";
  const ScenarioReport report = run_scenario(config);
  REQUIRE(!report.failures.empty());
  CHECK(report.failures[0].rfind("spectrum:", 0) == 0);
  const Check* failed = find_check(report, "spectrum.completed");
  REQUIRE(failed != nullptr);
  CHECK(!failed->passed);
  CHECK(!report.all_passed());
  // Experiments that do not need the table still ran.
  CHECK(find_check(report, "flow.hamiltonian_drift") != nullptr);
}

TEST_CASE("invalid configs are rejected before running") {
  ScenarioConfig config = default_config(Scenario::BridgeTorus);
  config.flat_length = 1.0;
  CHECK_THROWS_AS(run_scenario(config), ConfigError);
}
