#include "revlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "revlab/jet.hpp"

namespace revlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWrapTolerance = 1e-10;
constexpr int kCheckGrid = 4096;

template <class F>
ProfileFn make_profile(F f) {
  return [f](double x) {
    const Jet j = f(Jet::variable(x));
    return ProfileValue{j.v, j.d1, j.d2};
  };
}

template <class T>
T smooth_step_t(T t) {
  const double tv = [&] {
    if constexpr (std::is_same_v<T, Jet>) {
      return t.v;
    } else {
      return t;
    }
  }();
  if (tv <= 0.0) return T(0.0);
  if (tv >= 1.0) return T(1.0);
  using std::exp;
  const T left = exp(T(-1.0) / t);
  const T right = exp(T(-1.0) / (T(1.0) - t));
  return left / (left + right);
}

void check_torus_profile(const ProfileFn& profile, double length, const std::string& label) {
  const ProfileValue start = profile(0.0);
  const ProfileValue end = profile(length);
  const double wrap = std::max({std::abs(start.a - end.a), std::abs(start.da - end.da),
                                std::abs(start.d2a - end.d2a)});
  if (wrap > kWrapTolerance) {
    throw Error(label + ": profile is not periodic at x = base_length (residual " +
                std::to_string(wrap) + ")");
  }
  for (int i = 0; i < kCheckGrid; ++i) {
    const double x = length * i / kCheckGrid;
    if (!(profile(x).a > 0.0)) {
      throw Error(label + ": torus profile must be strictly positive (fails at x = " +
                  std::to_string(x) + ")");
    }
  }
}

void check_sphere_profile(const ProfileFn& profile, double length, const std::string& label) {
  const ProfileValue south = profile(0.0);
  const ProfileValue north = profile(length);
  if (std::abs(south.a) > kWrapTolerance || std::abs(north.a) > kWrapTolerance) {
    throw Error(label + ": sphere profile must vanish at both poles");
  }
  if (std::abs(south.da - 1.0) > 1e-8 || std::abs(north.da + 1.0) > 1e-8) {
    throw Error(label + ": pole closure requires a'(0) = 1 and a'(L) = -1");
  }
  for (int i = 0; i < kCheckGrid; ++i) {
    const double x = length * (i + 0.5) / kCheckGrid;
    if (!(profile(x).a > 0.0)) {
      throw Error(label + ": sphere profile must be positive on the interior (fails at x = " +
                  std::to_string(x) + ")");
    }
  }
}

}  // namespace

std::string to_string(Topology topology) {
  return topology == Topology::SphereType ? "sphere" : "torus";
}

std::string to_string(BandProfile band) {
  return band == BandProfile::RoundCos ? "round-cos" : "paper-sqrt";
}

BandProfile band_profile_from_string(const std::string& name) {
  if (name == "round-cos" || name == "RoundCos") return BandProfile::RoundCos;
  if (name == "paper-sqrt" || name == "PaperSqrt") return BandProfile::PaperSqrt;
  throw Error("unknown band profile '" + name + "'");
}

double smooth_step(double t) { return smooth_step_t(t); }

ProfileMetric::ProfileMetric(Topology topology, double base_length, ProfileFn profile,
                             std::string label, nlohmann::json parameters)
    : topology_(topology),
      base_length_(base_length),
      profile_(std::move(profile)),
      label_(std::move(label)),
      parameters_(std::move(parameters)) {
  if (!(base_length_ > 0.0)) throw Error(label_ + ": base_length must be positive");
  if (!profile_) throw Error(label_ + ": missing profile callable");

  auto a_of = [this](double x) { return profile_(x).a; };
  area_ = 2.0 * kPi *
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(a_of, 0.0, base_length_,
                                                                         15, 1e-13);

  // Dense sample, then polish the best sample with Brent.
  const int samples = 8192;
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i <= samples; ++i) {
    const double value = a_of(base_length_ * i / samples);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  const double step = base_length_ / samples;
  const double lo = std::max(0.0, (best - 1) * step);
  const double hi = std::min(base_length_, (best + 1) * step);
  const auto polished = boost::math::tools::brent_find_minima(
      [&](double x) { return -a_of(x); }, lo, hi, 52);
  max_a_ = std::max(best_value, -polished.second);
}

double ProfileMetric::wrap(double x) const {
  const double length = base_length_;
  if (topology_ == Topology::TorusType) {
    double y = std::fmod(x, length);
    if (y < 0.0) y += length;
    if (y >= length) y -= length;
    return y;
  }
  double y = std::fmod(x, 2.0 * length);
  if (y < 0.0) y += 2.0 * length;
  return y <= length ? y : 2.0 * length - y;
}

ProfileValue ProfileMetric::eval(double x) const {
  const double length = base_length_;
  if (topology_ == Topology::TorusType) return profile_(wrap(x));
  if (x >= 0.0 && x <= length) return profile_(x);
  double y = std::fmod(x, 2.0 * length);
  if (y < 0.0) y += 2.0 * length;
  if (y <= length) return profile_(y);
  const ProfileValue mirrored = profile_(2.0 * length - y);
  return {-mirrored.a, mirrored.da, -mirrored.d2a};
}

double ProfileMetric::curvature(double x) const {
  const ProfileValue v = eval(x);
  if (std::abs(v.a) > 1e-8) return -v.d2a / v.a;
  // Pole: K is even about the pole, take it from just inside.
  const double offset = 1e-5;
  const double y = wrap(x);
  const double inside = y < 0.5 * base_length_ ? y + offset : y - offset;
  const ProfileValue w = eval(inside);
  return -w.d2a / w.a;
}

ProfileMetric build_profile_metric(const MetricKind& kind) {
  return std::visit(
      [](const auto& k) -> ProfileMetric {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FlatTorus>) {
          if (!(k.c > 0.0)) throw Error("flat torus: radius c must be positive");
          if (!(k.base_length > 0.0)) throw Error("flat torus: base_length must be positive");
          const double c = k.c;
          return ProfileMetric(Topology::TorusType, k.base_length,
                               [c](double) { return ProfileValue{c, 0.0, 0.0}; }, "flat-torus",
                               {{"kind", "flat-torus"}, {"c", c}, {"base_length", k.base_length}});
        } else if constexpr (std::is_same_v<K, RoundSphere>) {
          return ProfileMetric(Topology::SphereType, kPi,
                               make_profile([](Jet x) { return sin(x); }), "round-sphere",
                               {{"kind", "round-sphere"}});
        } else {
          if (!(k.base_length > 0.0)) throw Error(k.label + ": base_length must be positive");
          if (!k.profile) throw Error(k.label + ": missing profile callable");
          if (k.topology == Topology::TorusType) {
            check_torus_profile(k.profile, k.base_length, k.label);
          } else {
            check_sphere_profile(k.profile, k.base_length, k.label);
          }
          nlohmann::json params = k.parameters;
          params["kind"] = "custom";
          params["topology"] = to_string(k.topology);
          params["base_length"] = k.base_length;
          params["label"] = k.label;
          return ProfileMetric(k.topology, k.base_length, k.profile, k.label, std::move(params));
        }
      },
      kind);
}

void validate(const BridgeSpec& spec) {
  const double eps = spec.band_half_width;
  if (!(eps > 0.0 && eps < 0.5)) throw Error("bridge: band_half_width must lie in (0, 1/2)");
  if (!(spec.bridge_width > 0.0)) throw Error("bridge: bridge_width must be positive");
  if (!(spec.flat_length >= 2.0 * kPi)) {
    throw Error("bridge: flat_length must be at least 2π (got " + std::to_string(spec.flat_length) +
                ")");
  }
  const double outer = eps + spec.bridge_width;
  if (spec.band_profile == BandProfile::PaperSqrt && !(outer < 1.0)) {
    throw Error("bridge: band plus bridge must stay inside |x| < 1 for the sqrt profile");
  }
  if (spec.band_profile == BandProfile::RoundCos && !(outer < 0.5 * kPi)) {
    throw Error("bridge: band plus bridge must stay inside |x| < π/2 for the cos profile");
  }
  // The bridge blends the continued band profile with the flat value; it is
  // monotone as long as the band profile stays above the flat value.
  const double edge = spec.band_profile == BandProfile::RoundCos ? std::cos(eps)
                                                                  : std::sqrt(1.0 - eps * eps);
  const double outer_band = spec.band_profile == BandProfile::RoundCos
                                ? std::cos(outer)
                                : std::sqrt(1.0 - outer * outer);
  if (!(outer_band > 0.5 * edge)) {
    throw Error("bridge: band profile drops below the flat value inside the bridge");
  }
}

ProfileMetric build_bridge_metric(const BridgeSpec& spec) {
  validate(spec);
  const double eps = spec.band_half_width;
  const double width = spec.bridge_width;
  const double length = spec.base_length();
  const bool round = spec.band_profile == BandProfile::RoundCos;
  const double flat = 0.5 * (round ? std::cos(eps) : std::sqrt(1.0 - eps * eps));

  auto band = [round](Jet r) { return round ? cos(r) : sqrt(Jet(1.0) - r * r); };

  auto profile = [=](Jet x) -> Jet {
    // Centre the band at x = 0 on the circle [-L/2, L/2).
    double centred = std::fmod(x.v, length);
    if (centred < -0.5 * length) centred += length;
    if (centred >= 0.5 * length) centred -= length;
    Jet r{centred, x.d1, x.d2};
    if (centred < 0.0) r = -r;
    if (r.v <= eps) return band(r);
    if (r.v >= eps + width) return Jet(flat);
    const Jet s = (r - Jet(eps)) / Jet(width);
    const Jet bridge = band(r) * (Jet(1.0) - smooth_step_t(s)) + Jet(flat) * smooth_step_t(s);
    const Jet chi_band = Jet(1.0) - smooth_step_t(Jet(2.0) * s);
    const Jet chi_flat = smooth_step_t(Jet(2.0) * s - Jet(1.0));
    return band(r) * chi_band + Jet(flat) * chi_flat +
           bridge * (Jet(1.0) - chi_band - chi_flat);
  };

  nlohmann::json params = {{"kind", "bridge-torus"},
                           {"band_half_width", eps},
                           {"bridge_width", width},
                           {"flat_length", spec.flat_length},
                           {"band_profile", to_string(spec.band_profile)}};
  return ProfileMetric(Topology::TorusType, length, make_profile(profile),
                       "bridge-torus-" + to_string(spec.band_profile), std::move(params));
}

ProfileMetric build_fourier_torus(double c, double base_length, const std::vector<double>& alpha,
                                  const std::vector<double>& beta, const std::string& label) {
  if (alpha.size() != beta.size()) throw Error(label + ": alpha and beta must have equal length");
  if (!(c > 0.0)) throw Error(label + ": mean radius c must be positive");
  const double k = 2.0 * kPi / base_length;
  auto profile = [=](Jet x) {
    Jet a(c);
    for (std::size_t m = 0; m < alpha.size(); ++m) {
      a = a + Jet(alpha[m]) * cos(Jet(k * static_cast<double>(m + 1)) * x + Jet(beta[m]));
    }
    return a;
  };
  CustomProfile custom{Topology::TorusType, base_length, make_profile(profile), label,
                       {{"c", c}, {"alpha", alpha}, {"beta", beta}}};
  return build_profile_metric(custom);
}

ProfileMetric build_perturbed_torus(const PerturbedTorusSpec& spec) {
  if (!(spec.amplitude >= 0.0 && spec.amplitude < 1.0)) {
    throw Error("perturbed torus: amplitude must lie in [0, 1)");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::vector<double> alpha(spec.modes);
  std::vector<double> beta(spec.modes);
  for (int m = 0; m < spec.modes; ++m) {
    alpha[m] = spec.amplitude * spec.c * unit(rng);
    beta[m] = phase(rng);
  }
  // Σ|α_m| may exceed c only if amplitude·modes ≥ 1; positivity is re-checked
  // by the custom-profile validation.
  auto metric = build_fourier_torus(spec.c, spec.base_length, alpha, beta, "perturbed-torus");
  nlohmann::json params = metric.parameters();
  params["seed"] = spec.seed;
  params["amplitude"] = spec.amplitude;
  return ProfileMetric(metric.topology(), metric.base_length(),
                       [metric](double x) { return metric.eval(x); }, "perturbed-torus",
                       std::move(params));
}

ProfileDiagnostics profile_diagnostics(const ProfileMetric& metric, int grid_size) {
  ProfileDiagnostics d;
  grid_size = std::max(grid_size, 16);
  d.grid_size = grid_size;
  const double length = metric.base_length();
  const bool sphere = metric.topology() == Topology::SphereType;
  const double h = length / grid_size;
  d.difference_step = h;
  d.min_a = std::numeric_limits<double>::infinity();
  d.max_a = -std::numeric_limits<double>::infinity();
  d.x.reserve(grid_size);
  d.curvature.reserve(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    const double x = sphere ? (i + 0.5) * h : i * h;
    const ProfileValue v = metric.eval(x);
    d.min_a = std::min(d.min_a, v.a);
    d.max_a = std::max(d.max_a, v.a);
    if (!(v.a > 0.0)) d.positive_interior = false;
    d.x.push_back(x);
    d.curvature.push_back(-v.d2a / v.a);
    const double fd = (metric.eval(x + h).da - metric.eval(x - h).da) / (2.0 * h);
    d.derivative_residual = std::max(d.derivative_residual, std::abs(fd - v.d2a));
  }
  if (sphere) {
    const ProfileValue south = metric.eval(0.0);
    const ProfileValue north = metric.eval(length);
    d.pole_residual = std::max({std::abs(south.a), std::abs(north.a), std::abs(south.da - 1.0),
                                std::abs(north.da + 1.0)});
  } else {
    const ProfileValue start = metric.eval_raw(0.0);
    const ProfileValue end = metric.eval_raw(length);
    d.periodicity_residual = std::max({std::abs(start.a - end.a), std::abs(start.da - end.da),
                                       std::abs(start.d2a - end.d2a)});
  }
  return d;
}

}  // namespace revlab
