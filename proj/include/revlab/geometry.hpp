#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace revlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Topology { SphereType, TorusType };

std::string to_string(Topology topology);

struct ProfileValue {
  double a = 0.0;
  double da = 0.0;
  double d2a = 0.0;
};

using ProfileFn = std::function<ProfileValue(double)>;

// Surface of revolution g = dx^2 + a(x)^2 dθ^2.
//
// SphereType: x ∈ [0, base_length], a vanishes at both ends (poles). Queries
// outside the interval use the odd reflection of the profile through the pole,
// which is smooth whenever the pole closes smoothly.
// TorusType: x ∈ ℝ / base_length·ℤ with a > 0 everywhere.
class ProfileMetric {
 public:
  ProfileMetric(Topology topology, double base_length, ProfileFn profile, std::string label,
                nlohmann::json parameters);

  Topology topology() const { return topology_; }
  double base_length() const { return base_length_; }
  const std::string& label() const { return label_; }
  // Canonical description of how the metric was built; used for cache keys.
  const nlohmann::json& parameters() const { return parameters_; }

  ProfileValue eval(double x) const;
  // The profile callable itself, without wrapping or pole reflection.
  ProfileValue eval_raw(double x) const { return profile_(x); }
  double a(double x) const { return eval(x).a; }
  // Gauss curvature K = -a''/a. At a pole the limit is taken from the interior.
  double curvature(double x) const;

  // Reduces x to the fundamental domain: [0, L) for tori, [0, L] for spheres.
  double wrap(double x) const;

  double area() const { return area_; }
  double max_a() const { return max_a_; }

 private:
  Topology topology_;
  double base_length_;
  ProfileFn profile_;
  std::string label_;
  nlohmann::json parameters_;
  double area_ = 0.0;
  double max_a_ = 0.0;
};

struct FlatTorus {
  double c = 1.0;
  double base_length = 6.283185307179586;
};

struct RoundSphere {};

struct CustomProfile {
  Topology topology = Topology::TorusType;
  double base_length = 0.0;
  ProfileFn profile;
  std::string label = "custom";
  nlohmann::json parameters = nlohmann::json::object();
};

using MetricKind = std::variant<FlatTorus, RoundSphere, CustomProfile>;

ProfileMetric build_profile_metric(const MetricKind& kind);

enum class BandProfile { RoundCos, PaperSqrt };

std::string to_string(BandProfile band);
BandProfile band_profile_from_string(const std::string& name);

// Torus of revolution with a round equatorial band |x| < ε, joined by smooth
// monotone bridges to a flat cylinder of radius half the band-edge radius.
struct BridgeSpec {
  double band_half_width = 0.25;
  double bridge_width = 0.25;
  double flat_length = 2.0 * 3.141592653589793 + 1.0;
  BandProfile band_profile = BandProfile::RoundCos;

  double base_length() const { return 2.0 * (band_half_width + bridge_width) + flat_length; }
};

void validate(const BridgeSpec& spec);
ProfileMetric build_bridge_metric(const BridgeSpec& spec);

// a(x) = c + Σ_{m=1..modes} α_m cos(2πmx/L + β_m) with |α_m| ≤ amplitude·c,
// coefficients drawn from a seeded generator.
struct PerturbedTorusSpec {
  double c = 1.0;
  double base_length = 6.283185307179586;
  double amplitude = 0.05;
  int modes = 5;
  std::uint64_t seed = 7;
};

ProfileMetric build_perturbed_torus(const PerturbedTorusSpec& spec);

// Fourier-profile torus a(x) = c + Σ_m α_m cos(2πmx/L + β_m) with given
// coefficients (m starts at 1).
ProfileMetric build_fourier_torus(double c, double base_length, const std::vector<double>& alpha,
                                  const std::vector<double>& beta, const std::string& label);

// Exp(-1/t) smooth step: 0 for t ≤ 0, 1 for t ≥ 1, C^∞ in between.
double smooth_step(double t);

struct ProfileDiagnostics {
  int grid_size = 0;
  double min_a = 0.0;
  double max_a = 0.0;
  std::vector<double> x;
  std::vector<double> curvature;
  // TorusType: max |f(0) - f(L)| over f ∈ {a, a', a''}. SphereType: 0.
  double periodicity_residual = 0.0;
  // SphereType: max of |a(0)|, |a(L)|, |a'(0) - 1|, |a'(L) + 1|. TorusType: 0.
  double pole_residual = 0.0;
  // max |central difference of a' - a''| over the grid, and the step used.
  double derivative_residual = 0.0;
  double difference_step = 0.0;
  bool positive_interior = true;
};

ProfileDiagnostics profile_diagnostics(const ProfileMetric& metric, int grid_size);

}  // namespace revlab
