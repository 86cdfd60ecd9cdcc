#include "revlab/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace revlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// x, θ, ξ_x, ξ_θ, then two normal Jacobi fields (Y, Y') started at (1, 0) and
// (0, 1).
using State = std::array<double, 8>;

double wrap_angle(double angle) {
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double wrap_symmetric(double value, double period) {
  double r = std::fmod(value, period);
  if (r > 0.5 * period) r -= period;
  if (r < -0.5 * period) r += period;
  return r;
}

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class GeodesicIntegrator {
 public:
  // Called after every accepted step with (t0, s0, t1, s1); returning false
  // stops the integration at t1.
  using Observer = std::function<bool(double, const State&, double, const State&)>;

  GeodesicIntegrator(const ProfileMetric& metric, const FlowOptions& options, bool with_jacobi)
      : metric_(metric), options_(options), with_jacobi_(with_jacobi) {
    if (!(options_.tolerance > 0.0)) throw Error("flow tolerance must be positive");
  }

  State rhs(const State& s) const {
    State d{};
    const ProfileValue v = metric_.eval(s[0]);
    const double xi_x = s[2];
    const double xi_t = s[3];
    double curvature = 0.0;
    if (xi_t == 0.0) {
      const double p = std::abs(xi_x);
      d[0] = p > 0.0 ? xi_x / p : 0.0;
    } else {
      const double a = v.a;
      const double p = std::sqrt(xi_x * xi_x + xi_t * xi_t / (a * a));
      d[0] = xi_x / p;
      d[1] = xi_t / (a * a * p);
      d[2] = xi_t * xi_t * v.da / (a * a * a * p);
    }
    if (with_jacobi_) {
      curvature = std::abs(v.a) > 1e-8 ? -v.d2a / v.a : metric_.curvature(s[0]);
      d[4] = s[5];
      d[5] = -curvature * s[4];
      d[6] = s[7];
      d[7] = -curvature * s[6];
    }
    return d;
  }

  double p_of(const State& s) const {
    return hamiltonian(metric_, PhasePoint{s[0], s[1], s[2], s[3]});
  }

  // Meridians reaching a pole continue on the opposite meridian.
  void reflect_poles(State& s) const {
    if (metric_.topology() != Topology::SphereType) return;
    const double length = metric_.base_length();
    for (int guard = 0; guard < 4 && (s[0] < 0.0 || s[0] > length); ++guard) {
      s[0] = s[0] < 0.0 ? -s[0] : 2.0 * length - s[0];
      s[1] += kPi;
      s[2] = -s[2];
    }
  }

  // Pulls (x, ξx) back onto p = level along the gradient of p². ξθ is
  // conserved exactly by the scheme and is left alone.
  void project_level(State& s, double level) const {
    const ProfileValue v = metric_.eval(s[0]);
    if (!(std::abs(v.a) > 1e-8)) return;
    const double a2 = v.a * v.a;
    const double defect = s[2] * s[2] + s[3] * s[3] / a2 - level * level;
    const double gx = -2.0 * s[3] * s[3] * v.da / (a2 * v.a);
    const double gxi = 2.0 * s[2];
    const double norm2 = gx * gx + gxi * gxi;
    if (!(norm2 > 1e-12) || !(std::abs(defect) < 1e-6)) return;
    s[0] -= defect * gx / norm2;
    s[2] -= defect * gxi / norm2;
  }

  // One DOPRI5 step; returns the scaled error norm (NaN-safe: returns +inf).
  double try_step(const State& y, double h, State& out) const {
    auto axpy = [](const State& base, std::initializer_list<std::pair<double, const State*>> terms,
                   double step) {
      State r = base;
      for (const auto& [coef, k] : terms) {
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += step * coef * (*k)[i];
      }
      return r;
    };
    const State k1 = rhs(y);
    const State k2 = rhs(axpy(y, {{a21, &k1}}, h));
    const State k3 = rhs(axpy(y, {{a31, &k1}, {a32, &k2}}, h));
    const State k4 = rhs(axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
    const State k5 = rhs(axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
    const State k6 = rhs(axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
    out = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
    const State k7 = rhs(out);
    const std::size_t checked = with_jacobi_ ? 8 : 4;
    double norm = 0.0;
    for (std::size_t i = 0; i < checked; ++i) {
      const double err =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = options_.tolerance * (1.0 + std::max(std::abs(y[i]), std::abs(out[i])));
      norm = std::max(norm, std::abs(err) / scale);
    }
    for (double v : out) {
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    }
    return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
  }

  // Integrates from (t0, y) to t1, calling the observer after each accepted step.
  State advance(State y, double t0, double t1, const Observer& observer = {}) {
    const double direction = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    double h = direction * std::min(options_.max_step, std::max(std::abs(t1 - t0), 1e-3));
    State next{};
    const double level = p_of(y);
    while (direction * (t1 - t) > 0.0) {
      if (direction * (t + h - t1) > 0.0) h = t1 - t;
      const double norm = try_step(y, h, next);
      bool accept = norm <= 1.0;
      if (accept) {
        reflect_poles(next);
        // Invariant monitor: p is conserved exactly by the flow.
        if (!(std::abs(p_of(next) - p_of(y)) <= options_.tolerance)) accept = false;
      }
      if (accept) project_level(next, level);
      if (accept) {
        const double t_next = (direction * (t + h - t1) >= 0.0) ? t1 : t + h;
        ++accepted_;
        const bool keep_going = !observer || observer(t, y, t_next, next);
        t = t_next;
        y = next;
        if (!keep_going) break;
        const double factor =
            norm > 0.0 ? std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0) : 5.0;
        h = direction * std::min(options_.max_step, std::abs(h) * factor);
      } else {
        ++rejected_;
        const double factor =
            std::isfinite(norm) && norm > 1.0 ? std::clamp(0.9 * std::pow(norm, -0.25), 0.1, 0.5)
                                              : 0.5;
        h *= factor;
        if (std::abs(h) < options_.min_step) {
          std::ostringstream msg;
          msg << "geodesic flow: step size underflow at t = " << t << " (x = " << y[0] << ")";
          throw FlowError(msg.str(), t);
        }
      }
    }
    return y;
  }

  int accepted() const { return accepted_; }
  int rejected() const { return rejected_; }

 private:
  const ProfileMetric& metric_;
  FlowOptions options_;
  bool with_jacobi_;
  int accepted_ = 0;
  int rejected_ = 0;
};

State to_state(const PhasePoint& p) { return {p.x, p.theta, p.xi_x, p.xi_theta, 1.0, 0.0, 0.0, 1.0}; }

PhasePoint to_point(const ProfileMetric& metric, const State& s) {
  return {metric.wrap(s[0]), wrap_angle(s[1]), s[2], s[3]};
}

// Local squared distance to the base point and its time derivative, using the
// metric frozen at the base: d² = Δx² + a(x₀)² Δθ².
struct DistanceProbe {
  const ProfileMetric& metric;
  BasePoint base;
  double a0;

  double dx(const State& s) const {
    if (metric.topology() == Topology::TorusType) {
      return wrap_symmetric(s[0] - base.x, metric.base_length());
    }
    return s[0] - base.x;
  }
  double dtheta(const State& s) const { return wrap_symmetric(s[1] - base.theta, kTwoPi); }
  double squared(const State& s) const {
    const double ex = dx(s);
    const double et = a0 * dtheta(s);
    return ex * ex + et * et;
  }
  double derivative(const State& s, const State& ds) const {
    return 2.0 * (dx(s) * ds[0] + a0 * a0 * dtheta(s) * ds[1]);
  }
};

}  // namespace

double hamiltonian(const ProfileMetric& metric, const PhasePoint& point) {
  if (point.xi_theta == 0.0) return std::abs(point.xi_x);
  const double a = metric.a(point.x);
  return std::sqrt(point.xi_x * point.xi_x + point.xi_theta * point.xi_theta / (a * a));
}

double clairaut_integral(const ProfileMetric& /*metric*/, const PhasePoint& point) {
  return point.xi_theta;
}

PhasePoint unit_covector(const ProfileMetric& metric, double x, double theta, double psi) {
  return {x, theta, std::cos(psi), metric.a(x) * std::sin(psi)};
}

double direction_angle(const ProfileMetric& metric, const PhasePoint& point) {
  const double a = metric.a(point.x);
  const double p = hamiltonian(metric, point);
  return wrap_angle(std::atan2(point.xi_theta / (a * p), point.xi_x / p));
}

FlowResult flow_geodesic(const ProfileMetric& metric, const PhasePoint& start, double t,
                         const FlowOptions& options) {
  GeodesicIntegrator integrator(metric, options, false);
  FlowResult result;
  if (options.record_trajectory) {
    result.times.push_back(0.0);
    result.trajectory.push_back(start);
  }
  GeodesicIntegrator::Observer observer;
  if (options.record_trajectory) {
    observer = [&](double, const State&, double t1, const State& s1) {
      result.times.push_back(t1);
      result.trajectory.push_back(to_point(metric, s1));
      return true;
    };
  }
  const State end = integrator.advance(to_state(start), 0.0, t, observer);
  result.end = to_point(metric, end);
  result.accepted_steps = integrator.accepted();
  result.rejected_steps = integrator.rejected();
  return result;
}

std::optional<LoopRecord> find_loop(const ProfileMetric& metric, BasePoint base, double psi,
                                    double t_max, const LoopOptions& options) {
  if (!(t_max > 0.0)) throw Error("find_loop: t_max must be positive");
  if (!(options.loop_tol > 0.0)) throw Error("find_loop: loop_tol must be positive");

  GeodesicIntegrator integrator(metric, options.flow, false);
  const DistanceProbe probe{metric, base, metric.a(base.x)};
  const double tol2 = options.loop_tol * options.loop_tol;
  std::optional<LoopRecord> found;

  auto refine = [&](double t0, const State& s0, double t1) {
    // Bisect on the sign of d(d²)/dt, re-integrating from the step start.
    double lo = t0;
    double hi = t1;
    State best = s0;
    double best_t = t0;
    for (int iter = 0; iter < 80 && hi - lo > 1e-13 * std::max(1.0, hi); ++iter) {
      const double mid = 0.5 * (lo + hi);
      GeodesicIntegrator local(metric, options.flow, false);
      const State s = local.advance(s0, t0, mid);
      const double slope = probe.derivative(s, integrator.rhs(s));
      if (slope < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      best = s;
      best_t = mid;
    }
    return std::pair{best_t, best};
  };

  auto observer = [&](double t0, const State& s0, double t1, const State& s1) {
    const double slope0 = probe.derivative(s0, integrator.rhs(s0));
    const double slope1 = probe.derivative(s1, integrator.rhs(s1));
    if (!(slope0 < 0.0 && slope1 >= 0.0)) return true;
    const double reach = std::abs(t1 - t0) + options.loop_tol;
    const double d_min = std::sqrt(std::min(probe.squared(s0), probe.squared(s1)));
    if (d_min > reach) return true;
    const auto [t_star, s_star] = refine(t0, s0, t1);
    const double d2 = probe.squared(s_star);
    if (d2 >= tol2) return true;
    const PhasePoint end = to_point(metric, s_star);
    LoopRecord record;
    record.direction_angle = wrap_angle(psi);
    record.return_time = t_star;
    record.return_direction_angle = direction_angle(metric, end);
    record.clairaut_value = s_star[3];
    record.closest_distance = std::sqrt(d2);
    const double mismatch =
        std::abs(wrap_symmetric(record.return_direction_angle - record.direction_angle, kTwoPi));
    record.is_smoothly_closed = mismatch <= options.closure_angle_tol;
    found = record;
    return false;
  };

  integrator.advance(to_state(unit_covector(metric, base.x, base.theta, psi)), 0.0, t_max,
                     observer);
  return found;
}

double loop_length(const ProfileMetric& metric, BasePoint base, double psi, double t_max,
                   double loop_tol, const FlowOptions& flow) {
  LoopOptions options;
  options.loop_tol = loop_tol;
  options.flow = flow;
  const auto loop = find_loop(metric, base, psi, t_max, options);
  return loop ? loop->return_time : kNoLoop;
}

LoopsetReport loopset_scan(const ProfileMetric& metric, BasePoint base, double t_max,
                           int n_directions, const LoopsetOptions& options) {
  if (n_directions < 64) throw Error("loopset_scan: n_directions must be at least 64");
  if (!(t_max > 0.0)) throw Error("loopset_scan: t_max must be positive");
  if (!(options.cluster_tol > 0.0)) throw Error("loopset_scan: cluster_tol must be positive");

  LoopsetReport report;
  report.base = base;
  report.t_max = t_max;
  report.samples = n_directions;
  report.options = options;

  if (metric.topology() == Topology::SphereType) {
    const double length = metric.base_length();
    if (base.x <= 1e-12 || base.x >= length - 1e-12) {
      if (!options.allow_pole_analytic) {
        throw Error("loopset_scan: base point is a pole; every direction is a meridian loop "
                    "(set allow_pole_analytic for the analytic report)");
      }
      report.analytic_pole = true;
      const double period = 2.0 * length;
      if (period <= t_max) {
        LoopComponent full;
        full.psi_begin = 0.0;
        full.psi_end = kTwoPi;
        full.return_time = period;
        full.grid_count = static_cast<std::size_t>(n_directions);
        report.components.push_back(full);
        report.measure_estimate = kTwoPi;
        report.lsp.push_back(period);
      }
      return report;
    }
  }

  const double step = kTwoPi / n_directions;
  std::vector<std::optional<LoopRecord>> grid(static_cast<std::size_t>(n_directions));
  std::vector<std::string> failures(grid.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n_directions; ++i) {
    try {
      grid[i] = find_loop(metric, base, i * step, t_max, options.loop);
    } catch (const FlowError& e) {
      failures[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) throw FlowError(failures[i], 0.0);
  }

  // Runs of consecutive looping directions whose return times stay within
  // cluster_tol of each other.
  struct Run {
    std::size_t first;
    std::size_t count;
    double t_min;
    double t_max;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid[i]) continue;
    const double t = grid[i]->return_time;
    if (!runs.empty()) {
      Run& last = runs.back();
      const bool adjacent = last.first + last.count == i;
      const double lo = std::min(last.t_min, t);
      const double hi = std::max(last.t_max, t);
      if (adjacent && hi - lo <= options.cluster_tol) {
        ++last.count;
        last.t_min = lo;
        last.t_max = hi;
        continue;
      }
    }
    runs.push_back({i, 1, t, t});
  }
  const std::size_t n = grid.size();
  if (runs.size() > 1 && runs.front().first == 0 &&
      runs.back().first + runs.back().count == n) {
    const double lo = std::min(runs.front().t_min, runs.back().t_min);
    const double hi = std::max(runs.front().t_max, runs.back().t_max);
    if (hi - lo <= options.cluster_tol) {
      runs.back().count += runs.front().count;
      runs.back().t_min = lo;
      runs.back().t_max = hi;
      runs.erase(runs.begin());
    }
  }

  auto loops_with = [&](double psi, double reference) {
    try {
      const auto loop = find_loop(metric, base, psi, t_max, options.loop);
      return loop && std::abs(loop->return_time - reference) <= options.cluster_tol;
    } catch (const FlowError&) {
      return false;
    }
  };
  auto refine_edge = [&](double inside, double outside, double reference) {
    while (std::abs(outside - inside) > options.resolution_floor) {
      const double mid = 0.5 * (inside + outside);
      if (loops_with(mid, reference)) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return 0.5 * (inside + outside);
  };

  bool hit_floor = false;
  for (const Run& run : runs) {
    LoopComponent component;
    component.grid_count = run.count;
    component.time_spread = run.t_max - run.t_min;
    double sum = 0.0;
    for (std::size_t k = 0; k < run.count; ++k) sum += grid[(run.first + k) % n]->return_time;
    component.return_time = sum / static_cast<double>(run.count);
    if (run.count == n) {
      component.psi_begin = 0.0;
      component.psi_end = kTwoPi;
    } else {
      const double first = static_cast<double>(run.first) * step;
      const double last = first + static_cast<double>(run.count - 1) * step;
      component.psi_begin = refine_edge(first, first - step, component.return_time);
      component.psi_end = refine_edge(last, last + step, component.return_time);
      if (component.psi_end - component.psi_begin <= 2.0 * options.resolution_floor) {
        component.isolated = true;
        hit_floor = true;
      }
      if (component.psi_begin < 0.0) {
        component.psi_begin += kTwoPi;
        component.psi_end += kTwoPi;
      }
    }
    report.components.push_back(component);
  }
  if (hit_floor) {
    report.warnings.push_back(
        "refinement reached the resolution floor; isolated loop directions count as measure zero");
  }

  for (const auto& loop : grid) {
    if (loop) report.loops.push_back(*loop);
  }

  double measure = 0.0;
  std::vector<double> times;
  for (const auto& component : report.components) {
    measure += component.measure();
    times.push_back(component.return_time);
  }
  report.measure_estimate = std::clamp(measure, 0.0, kTwoPi);
  std::sort(times.begin(), times.end());
  for (double t : times) {
    if (report.lsp.empty() || t - report.lsp.back() > options.cluster_tol) report.lsp.push_back(t);
  }
  return report;
}

std::string loopset_csv(const LoopsetReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "psi,return_time,return_angle,clairaut,smooth_closed\n";
  for (const auto& loop : report.loops) {
    out << loop.direction_angle << ',' << loop.return_time << ',' << loop.return_direction_angle
        << ',' << loop.clairaut_value << ',' << (loop.is_smoothly_closed ? 1 : 0) << '\n';
  }
  return out.str();
}

nlohmann::json loopset_summary(const LoopsetReport& report) {
  nlohmann::json components = nlohmann::json::array();
  for (const auto& c : report.components) {
    components.push_back({{"psi_begin", c.psi_begin},
                          {"psi_end", c.psi_end},
                          {"return_time", c.return_time},
                          {"time_spread", c.time_spread},
                          {"grid_count", c.grid_count},
                          {"isolated", c.isolated},
                          {"measure", c.measure()}});
  }
  return {{"measure_estimate", report.measure_estimate},
          {"lsp", report.lsp},
          {"components", components},
          {"analytic_pole", report.analytic_pole},
          {"warnings", report.warnings},
          {"parameters",
           {{"base_x", report.base.x},
            {"base_theta", report.base.theta},
            {"t_max", report.t_max},
            {"n_directions", report.samples},
            {"loop_tol", report.options.loop.loop_tol},
            {"cluster_tol", report.options.cluster_tol},
            {"flow_tol", report.options.loop.flow.tolerance},
            {"resolution_floor", report.options.resolution_floor}}}};
}

JacobiResult jacobi_transfer(const ProfileMetric& metric, BasePoint base, double psi, double t,
                             const FlowOptions& options) {
  if (!(t > 0.0)) throw Error("jacobi_transfer: t must be positive");
  GeodesicIntegrator integrator(metric, options, true);
  JacobiResult result;
  auto observer = [&](double t0, const State& s0, double t1, const State& s1) {
    const double y0 = s0[6];
    const double y1 = s1[6];
    if (y1 == 0.0 && t1 > 0.0) {
      result.conjugate_times.push_back(t1);
    } else if (y0 != 0.0 && y0 * y1 < 0.0) {
      double lo = t0;
      double hi = t1;
      while (hi - lo > 1e-13 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        GeodesicIntegrator local(metric, options, true);
        const State s = local.advance(s0, t0, mid);
        if (s[6] * y0 > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      result.conjugate_times.push_back(0.5 * (lo + hi));
    }
    return true;
  };
  const State end = integrator.advance(
      to_state(unit_covector(metric, base.x, base.theta, psi)), 0.0, t, observer);
  result.transfer = {{{end[4], end[6]}, {end[5], end[7]}}};
  return result;
}

}  // namespace revlab
