#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revlab/geodesics.hpp"
#include "revlab/weyl.hpp"

namespace revlab::lab {

inline constexpr const char* kVersion = "1.0.0";

enum class Scenario { FlatTorus, RoundSphere, BridgeTorus, PerturbedTorus, Custom };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);
std::vector<std::string> scenario_names();

enum class CachePolicy { Use, Refresh, Off };

std::string to_string(CachePolicy policy);

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& reason)
      : Error("config field '" + field + "': " + reason), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct NamedPoint {
  std::string name;
  double x = 0.0;
  double theta = 0.0;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::FlatTorus;

  // Metric parameters.
  double c = 1.0;
  double base_length = 6.283185307179586;
  double band_half_width = 0.25;
  double bridge_width = 0.25;
  double flat_length = 6.283185307179586 + 1.0;
  std::string band_profile = "round-cos";
  double perturbation_amplitude = 0.05;
  int perturbation_modes = 5;
  std::vector<double> fourier_alpha;  // custom scenario
  std::vector<double> fourier_beta;

  // Spectrum.
  double lambda_max = 40.0;
  double lambda_ceiling = 60.0;
  bool allow_above_ceiling = false;
  int grid_size = 2048;
  double cluster_tol = 1e-6;
  // "numeric", "analytic" (flat torus and round sphere only) or "auto".
  std::string spectral_source = "auto";

  // Loopsets and flow.
  std::vector<NamedPoint> base_points;
  int random_base_points = 0;  // extra seeded base points (perturbed torus)
  double t_max = 7.0;
  int n_directions = 4096;
  double loop_tol = 1e-4;
  double loop_cluster_tol = 1e-3;
  double flow_tol = 1e-10;
  double flow_horizon = 50.0;

  // Spectral functionals.
  std::vector<NamedPoint> evaluation_points;
  std::vector<double> return_times;
  double return_lambda = 40.0;
  int k_max = 5;
  int bins_per_decade = 8;
  // Growth fits use λ ∈ [fit_lambda_min, lambda_max].
  double fit_lambda_min = 5.0;

  std::string output_dir = "lab-out";
  std::uint64_t seed = 7;
  CachePolicy cache_policy = CachePolicy::Use;
  std::string cache_dir;  // defaults to <output_dir>/cache
};

// Defaults for a scenario; load_config starts from these.
ScenarioConfig default_config(Scenario scenario);
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text);
void validate(const ScenarioConfig& config);
nlohmann::json to_json(const ScenarioConfig& config);
// Hex SHA-256 of the canonical JSON form of the config.
std::string config_hash(const ScenarioConfig& config);

ProfileMetric build_metric(const ScenarioConfig& config);
std::vector<NamedPoint> resolved_base_points(const ScenarioConfig& config);

std::string sha256_hex(const std::string& data);

// On-disk SpectralTable cache: <dir>/<key>/header.json + modes.csv.
struct SpectralCache {
  std::filesystem::path directory;

  static std::string key(const ProfileMetric& metric, double lambda_max, int grid_size,
                         double cluster_tol);
  std::optional<SpectralTable> load(const ProfileMetric& metric, double lambda_max, int grid_size,
                                    double cluster_tol) const;
  void store(const SpectralTable& table, const ProfileMetric& metric) const;
};

// Content hash of a table's numeric data (eigenvalues and samples).
std::string table_hash(const SpectralTable& table);

struct Check {
  std::string name;
  std::string description;
  double value = 0.0;
  std::string op;  // "<=", ">=", "within"
  double bound = 0.0;
  double target = 0.0;  // for "within": |value - target| <= bound
  bool passed = false;
  std::string note;
  // How `lab verify` recomputes the value from exported files; null when it
  // can only re-evaluate the stored value.
  nlohmann::json source;
};

Check make_check(std::string name, std::string description, double value, std::string op,
                 double bound, double target = 0.0, std::string note = {});
bool evaluate(const Check& check);

struct NamedSeries {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ScenarioReport {
  ScenarioConfig config;
  std::string config_hash;
  std::string table_hash;
  std::string table_source;
  bool cache_hit = false;
  std::vector<Check> checks;
  std::vector<std::string> failures;  // experiments that raised errors
  std::vector<std::string> notes;
  std::map<std::string, LoopsetReport> loopsets;
  std::map<std::string, GrowthFit> fits;
  std::map<std::string, nlohmann::json> summaries;
  std::vector<NamedSeries> tables;     // CSV outputs
  std::vector<NamedSeries> plot_data;  // two-column λ vs quantity
  std::map<std::string, double> runtimes;  // seconds per experiment

  bool all_passed() const;
};

ScenarioReport run_scenario(const ScenarioConfig& config);

struct ExportOptions {
  bool csv = true;
  bool json = true;
  bool plotdata = true;
  // Runtimes differ between runs; they are written to timings.json only on request.
  bool timings = false;
};

// Writes into <output_dir>/<scenario>-<hash12>/ and returns that directory.
std::filesystem::path export_report(const ScenarioReport& report, const ExportOptions& options = {});

struct VerifyResult {
  std::vector<Check> checks;
  std::vector<std::string> mismatches;
  bool ok() const;
};

// Re-evaluates every stored check, recomputing fit exponents, loopset
// measures and return-measure diagnostics from the exported data files.
VerifyResult verify_report(const std::filesystem::path& directory);

}  // namespace revlab::lab
