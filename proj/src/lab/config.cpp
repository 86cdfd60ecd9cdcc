#include <algorithm>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "revlab/lab.hpp"

namespace revlab::lab {

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::pair<Scenario, std::string>> kScenarioNames = {
    {Scenario::FlatTorus, "flat-torus"},
    {Scenario::RoundSphere, "round-sphere"},
    {Scenario::BridgeTorus, "bridge-torus"},
    {Scenario::PerturbedTorus, "perturbed-torus"},
    {Scenario::Custom, "custom"},
};

CachePolicy policy_from_string(const std::string& name) {
  if (name == "use") return CachePolicy::Use;
  if (name == "refresh") return CachePolicy::Refresh;
  if (name == "off") return CachePolicy::Off;
  throw ConfigError("cache_policy", "expected use, refresh or off, got '" + name + "'");
}

template <typename T>
void read(const YAML::Node& root, const char* key, T& out) {
  const YAML::Node node = root[key];
  if (!node) return;
  try {
    out = node.as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(key, std::string("cannot parse value: ") + e.what());
  }
}

std::vector<NamedPoint> read_points(const YAML::Node& root, const char* key,
                                    std::vector<NamedPoint> fallback) {
  const YAML::Node node = root[key];
  if (!node) return fallback;
  if (!node.IsSequence()) throw ConfigError(key, "expected a list of points");
  std::vector<NamedPoint> points;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const YAML::Node item = node[i];
    NamedPoint p;
    try {
      p.name = item["name"] ? item["name"].as<std::string>() : "p" + std::to_string(i);
      p.x = item["x"].as<double>();
      p.theta = item["theta"] ? item["theta"].as<double>() : 0.0;
    } catch (const YAML::Exception& e) {
      throw ConfigError(key, "entry " + std::to_string(i) + ": " + e.what());
    }
    points.push_back(p);
  }
  return points;
}

void require_positive(double value, const char* field) {
  if (!(value > 0.0)) throw ConfigError(field, "must be positive");
}

void check_point_names(const std::vector<NamedPoint>& points, const char* field) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string& name = points[i].name;
    if (name.empty() || name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_-") !=
                            std::string::npos) {
      throw ConfigError(field, "point name '" + name + "' must use [a-z0-9_-]");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (points[k].name == name) throw ConfigError(field, "duplicate point name '" + name + "'");
    }
  }
}

nlohmann::json points_json(const std::vector<NamedPoint>& points) {
  nlohmann::json out = nlohmann::json::array();
  for (const NamedPoint& p : points) out.push_back({{"name", p.name}, {"x", p.x}, {"theta", p.theta}});
  return out;
}

}  // namespace

std::string to_string(CachePolicy policy) {
  switch (policy) {
    case CachePolicy::Use:
      return "use";
    case CachePolicy::Refresh:
      return "refresh";
    case CachePolicy::Off:
      return "off";
  }
  return "use";
}

std::string to_string(Scenario scenario) {
  for (const auto& [s, name] : kScenarioNames) {
    if (s == scenario) return name;
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  for (const auto& [s, n] : kScenarioNames) {
    if (n == name) return s;
  }
  throw ConfigError("scenario", "unknown scenario '" + name + "'");
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& entry : kScenarioNames) names.push_back(entry.second);
  return names;
}

ScenarioConfig default_config(Scenario scenario) {
  ScenarioConfig config;
  config.scenario = scenario;
  switch (scenario) {
    case Scenario::FlatTorus:
      config.lambda_max = 40.0;
      config.evaluation_points = {{"origin", 0.0, 0.0}, {"generic", 1.234, 2.345}};
      config.base_points = {{"origin", 0.0, 0.0}};
      config.return_times = {1.0, 2.0 * kPi};
      break;
    case Scenario::RoundSphere:
      config.base_length = kPi;
      config.lambda_max = 40.0;
      config.evaluation_points = {{"pole", 0.0, 0.0}, {"equator", kPi / 2.0, 0.0}};
      config.base_points = {{"mid", 1.0, 0.0}};
      config.return_times = {2.0 * kPi};
      break;
    case Scenario::BridgeTorus: {
      config.lambda_max = 60.0;
      config.grid_size = 4096;
      config.fit_lambda_min = 10.0;
      const double bridge = config.band_half_width + 0.5 * config.bridge_width;
      const double flat = config.band_half_width + config.bridge_width + 0.5 * config.flat_length;
      config.evaluation_points = {{"band", 0.0, 0.0}, {"bridge", bridge, 0.0}, {"flat", flat, 0.0}};
      config.base_points = {{"band", 0.0, 0.0}};
      config.return_times = {2.0 * kPi};
      break;
    }
    case Scenario::PerturbedTorus:
      config.lambda_max = 30.0;
      config.evaluation_points = {{"origin", 0.0, 0.0}};
      config.random_base_points = 5;
      config.return_times = {2.0 * kPi};
      config.return_lambda = 30.0;
      break;
    case Scenario::Custom:
      config.lambda_max = 30.0;
      config.fourier_alpha = {0.1};
      config.fourier_beta = {0.0};
      config.evaluation_points = {{"origin", 0.0, 0.0}};
      config.base_points = {{"origin", 0.0, 0.0}};
      config.return_times = {2.0 * kPi};
      config.return_lambda = 30.0;
      break;
  }
  return config;
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<file>", std::string("malformed config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<file>", "expected key-value pairs at the top level");
  if (!root["scenario"]) throw ConfigError("scenario", "missing");
  ScenarioConfig config = default_config(scenario_from_string(root["scenario"].as<std::string>()));

  static const std::vector<std::string> known = {
      "scenario", "c", "base_length", "band_half_width", "bridge_width", "flat_length",
      "band_profile", "perturbation_amplitude", "perturbation_modes", "fourier_alpha",
      "fourier_beta", "lambda_max", "lambda_ceiling", "allow_above_ceiling", "grid_size",
      "cluster_tol", "spectral_source", "base_points", "random_base_points", "t_max",
      "n_directions", "loop_tol", "loop_cluster_tol", "flow_tol", "flow_horizon",
      "evaluation_points", "return_times", "return_lambda", "k_max", "bins_per_decade", "fit_lambda_min",
      "output_dir", "seed", "cache_policy", "cache_dir"};
  for (const auto& item : root) {
    const std::string key = item.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(key, "unknown field");
    }
  }

  // Bridge geometry changes move the default evaluation points.
  const bool bridge_points_default = config.scenario == Scenario::BridgeTorus &&
                                     !root["evaluation_points"];

  read(root, "c", config.c);
  read(root, "base_length", config.base_length);
  read(root, "band_half_width", config.band_half_width);
  read(root, "bridge_width", config.bridge_width);
  read(root, "flat_length", config.flat_length);
  read(root, "band_profile", config.band_profile);
  read(root, "perturbation_amplitude", config.perturbation_amplitude);
  read(root, "perturbation_modes", config.perturbation_modes);
  read(root, "fourier_alpha", config.fourier_alpha);
  read(root, "fourier_beta", config.fourier_beta);
  read(root, "lambda_max", config.lambda_max);
  read(root, "lambda_ceiling", config.lambda_ceiling);
  read(root, "allow_above_ceiling", config.allow_above_ceiling);
  read(root, "grid_size", config.grid_size);
  read(root, "cluster_tol", config.cluster_tol);
  read(root, "spectral_source", config.spectral_source);
  config.base_points = read_points(root, "base_points", config.base_points);
  read(root, "random_base_points", config.random_base_points);
  read(root, "t_max", config.t_max);
  read(root, "n_directions", config.n_directions);
  read(root, "loop_tol", config.loop_tol);
  read(root, "loop_cluster_tol", config.loop_cluster_tol);
  read(root, "flow_tol", config.flow_tol);
  read(root, "flow_horizon", config.flow_horizon);
  config.evaluation_points = read_points(root, "evaluation_points", config.evaluation_points);
  read(root, "return_times", config.return_times);
  // Without an explicit value the return measure follows a lowered lambda_max.
  if (!root["return_lambda"]) config.return_lambda = std::min(config.return_lambda, config.lambda_max);
  read(root, "return_lambda", config.return_lambda);
  read(root, "k_max", config.k_max);
  read(root, "bins_per_decade", config.bins_per_decade);
  read(root, "fit_lambda_min", config.fit_lambda_min);
  read(root, "output_dir", config.output_dir);
  read(root, "seed", config.seed);
  if (root["cache_policy"]) config.cache_policy = policy_from_string(root["cache_policy"].as<std::string>());
  read(root, "cache_dir", config.cache_dir);

  if (bridge_points_default) {
    const double bridge = config.band_half_width + 0.5 * config.bridge_width;
    const double flat = config.band_half_width + config.bridge_width + 0.5 * config.flat_length;
    config.evaluation_points = {{"band", 0.0, 0.0}, {"bridge", bridge, 0.0}, {"flat", flat, 0.0}};
  }
  validate(config);
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const ScenarioConfig& config) {
  require_positive(config.c, "c");
  require_positive(config.base_length, "base_length");
  require_positive(config.lambda_max, "lambda_max");
  require_positive(config.lambda_ceiling, "lambda_ceiling");
  if (config.lambda_max > config.lambda_ceiling && !config.allow_above_ceiling) {
    throw ConfigError("lambda_max", "exceeds lambda_ceiling " + std::to_string(config.lambda_ceiling) +
                                        " (set allow_above_ceiling to override)");
  }
  if (config.grid_size < 128) throw ConfigError("grid_size", "must be at least 128");
  require_positive(config.cluster_tol, "cluster_tol");
  if (config.spectral_source != "auto" && config.spectral_source != "numeric" &&
      config.spectral_source != "analytic") {
    throw ConfigError("spectral_source", "expected auto, numeric or analytic");
  }
  if (config.spectral_source == "analytic" && config.scenario != Scenario::FlatTorus &&
      config.scenario != Scenario::RoundSphere) {
    throw ConfigError("spectral_source", "analytic spectra exist only for flat-torus and round-sphere");
  }
  require_positive(config.t_max, "t_max");
  if (config.n_directions < 64) throw ConfigError("n_directions", "must be at least 64");
  require_positive(config.loop_tol, "loop_tol");
  require_positive(config.loop_cluster_tol, "loop_cluster_tol");
  require_positive(config.flow_tol, "flow_tol");
  require_positive(config.flow_horizon, "flow_horizon");
  require_positive(config.return_lambda, "return_lambda");
  if (config.return_lambda > config.lambda_max) {
    throw ConfigError("return_lambda", "exceeds lambda_max");
  }
  for (double t : config.return_times) require_positive(t, "return_times");
  if (config.k_max < 1) throw ConfigError("k_max", "must be at least 1");
  if (config.bins_per_decade < 1) throw ConfigError("bins_per_decade", "must be at least 1");
  require_positive(config.fit_lambda_min, "fit_lambda_min");
  if (config.fit_lambda_min >= config.lambda_max) {
    throw ConfigError("fit_lambda_min", "must be below lambda_max");
  }
  if (config.random_base_points < 0) throw ConfigError("random_base_points", "must be nonnegative");
  if (config.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  check_point_names(config.base_points, "base_points");
  check_point_names(config.evaluation_points, "evaluation_points");

  // Metric parameters: the geometry module's own checks, reported per field.
  switch (config.scenario) {
    case Scenario::BridgeTorus: {
      require_positive(config.band_half_width, "band_half_width");
      require_positive(config.bridge_width, "bridge_width");
      if (config.band_half_width >= 0.5) throw ConfigError("band_half_width", "must be below 1/2");
      if (config.flat_length < 2.0 * kPi) {
        throw ConfigError("flat_length", "must be at least 2π so flat-part loops are long");
      }
      BandProfile band;
      try {
        band = band_profile_from_string(config.band_profile);
      } catch (const Error& e) {
        throw ConfigError("band_profile", e.what());
      }
      try {
        validate(BridgeSpec{config.band_half_width, config.bridge_width, config.flat_length, band});
      } catch (const Error& e) {
        throw ConfigError("bridge_width", e.what());
      }
      break;
    }
    case Scenario::PerturbedTorus:
      if (config.perturbation_amplitude < 0.0 || config.perturbation_amplitude > 0.05) {
        throw ConfigError("perturbation_amplitude", "must lie in [0, 0.05]");
      }
      if (config.perturbation_modes < 1) throw ConfigError("perturbation_modes", "must be at least 1");
      break;
    case Scenario::Custom:
      if (config.fourier_alpha.size() != config.fourier_beta.size()) {
        throw ConfigError("fourier_beta", "must have as many entries as fourier_alpha");
      }
      try {
        build_fourier_torus(config.c, config.base_length, config.fourier_alpha, config.fourier_beta,
                            "custom");
      } catch (const Error& e) {
        throw ConfigError("fourier_alpha", e.what());
      }
      break;
    default:
      break;
  }
}

nlohmann::json to_json(const ScenarioConfig& config) {
  return {
      {"scenario", to_string(config.scenario)},
      {"c", config.c},
      {"base_length", config.base_length},
      {"band_half_width", config.band_half_width},
      {"bridge_width", config.bridge_width},
      {"flat_length", config.flat_length},
      {"band_profile", config.band_profile},
      {"perturbation_amplitude", config.perturbation_amplitude},
      {"perturbation_modes", config.perturbation_modes},
      {"fourier_alpha", config.fourier_alpha},
      {"fourier_beta", config.fourier_beta},
      {"lambda_max", config.lambda_max},
      {"lambda_ceiling", config.lambda_ceiling},
      {"allow_above_ceiling", config.allow_above_ceiling},
      {"grid_size", config.grid_size},
      {"cluster_tol", config.cluster_tol},
      {"spectral_source", config.spectral_source},
      {"base_points", points_json(config.base_points)},
      {"random_base_points", config.random_base_points},
      {"t_max", config.t_max},
      {"n_directions", config.n_directions},
      {"loop_tol", config.loop_tol},
      {"loop_cluster_tol", config.loop_cluster_tol},
      {"flow_tol", config.flow_tol},
      {"flow_horizon", config.flow_horizon},
      {"evaluation_points", points_json(config.evaluation_points)},
      {"return_times", config.return_times},
      {"return_lambda", config.return_lambda},
      {"k_max", config.k_max},
      {"bins_per_decade", config.bins_per_decade},
      {"fit_lambda_min", config.fit_lambda_min},
      {"seed", config.seed},
  };
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

// Output location and cache policy do not change results, so they stay out of the hash.
std::string config_hash(const ScenarioConfig& config) { return sha256_hex(to_json(config).dump()); }

ProfileMetric build_metric(const ScenarioConfig& config) {
  switch (config.scenario) {
    case Scenario::FlatTorus:
      return build_profile_metric(FlatTorus{config.c, config.base_length});
    case Scenario::RoundSphere:
      return build_profile_metric(RoundSphere{});
    case Scenario::BridgeTorus:
      return build_bridge_metric(BridgeSpec{config.band_half_width, config.bridge_width,
                                            config.flat_length,
                                            band_profile_from_string(config.band_profile)});
    case Scenario::PerturbedTorus:
      return build_perturbed_torus(PerturbedTorusSpec{config.c, config.base_length,
                                                      config.perturbation_amplitude,
                                                      config.perturbation_modes, config.seed});
    case Scenario::Custom:
      return build_fourier_torus(config.c, config.base_length, config.fourier_alpha,
                                 config.fourier_beta, "custom");
  }
  throw Error("unknown scenario");
}

std::vector<NamedPoint> resolved_base_points(const ScenarioConfig& config) {
  std::vector<NamedPoint> points = config.base_points;
  if (config.random_base_points > 0) {
    const ProfileMetric metric = build_metric(config);
    // Separate stream from the metric's coefficients.
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> ux(0.0, metric.base_length());
    std::uniform_real_distribution<double> ut(0.0, 2.0 * kPi);
    for (int i = 0; i < config.random_base_points; ++i) {
      const double x = ux(rng);
      const double theta = ut(rng);
      points.push_back({"random" + std::to_string(i), x, theta});
    }
  }
  return points;
}

}  // namespace revlab::lab
