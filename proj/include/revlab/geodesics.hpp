#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "revlab/geometry.hpp"

namespace revlab {

// Point of T*M in (x, θ, ξ_x, ξ_θ) coordinates.
struct PhasePoint {
  double x = 0.0;
  double theta = 0.0;
  double xi_x = 0.0;
  double xi_theta = 0.0;
};

// p(x, ξ) = sqrt(ξ_x² + ξ_θ²/a(x)²), the symbol of sqrt(-Δ).
double hamiltonian(const ProfileMetric& metric, const PhasePoint& point);

// ξ_θ, the pairing of ξ with the rotation field ∂/∂θ.
double clairaut_integral(const ProfileMetric& metric, const PhasePoint& point);

// Unit covector at (x, θ) making angle ψ with the meridian ∂/∂x:
// ξ_x = cos ψ, ξ_θ = a(x) sin ψ.
PhasePoint unit_covector(const ProfileMetric& metric, double x, double theta, double psi);

// Angle of a covector relative to the meridian, in [0, 2π).
double direction_angle(const ProfileMetric& metric, const PhasePoint& point);

struct FlowOptions {
  // Per-step tolerance: embedded error estimate and the |Δp| invariant monitor.
  double tolerance = 1e-10;
  double max_step = 0.1;
  double min_step = 1e-13;
  bool record_trajectory = false;
};

class FlowError : public Error {
 public:
  FlowError(const std::string& what, double time_reached)
      : Error(what), time_reached_(time_reached) {}
  double time_reached() const { return time_reached_; }

 private:
  double time_reached_;
};

struct FlowResult {
  PhasePoint end;  // x and θ reduced to the fundamental domain
  std::vector<double> times;
  std::vector<PhasePoint> trajectory;  // filled when record_trajectory is set
  int accepted_steps = 0;
  int rejected_steps = 0;
};

// exp(t H_p)(start). Negative t integrates backwards.
FlowResult flow_geodesic(const ProfileMetric& metric, const PhasePoint& start, double t,
                         const FlowOptions& options = {});

struct BasePoint {
  double x = 0.0;
  double theta = 0.0;
};

struct LoopRecord {
  double direction_angle = 0.0;
  double return_time = 0.0;
  double return_direction_angle = 0.0;
  double clairaut_value = 0.0;
  double closest_distance = 0.0;
  bool is_smoothly_closed = false;
};

struct LoopOptions {
  double loop_tol = 1e-4;
  // Return direction must match the initial one within this angle to count as
  // a smoothly closed geodesic.
  double closure_angle_tol = 1e-3;
  FlowOptions flow{};
};

constexpr double kNoLoop = std::numeric_limits<double>::infinity();

// First return of the geodesic (base, ψ) within loop_tol of the base point,
// or std::nullopt when none occurs in (0, t_max].
std::optional<LoopRecord> find_loop(const ProfileMetric& metric, BasePoint base, double psi,
                                    double t_max, const LoopOptions& options = {});

// L*(x, ξ(ψ)) truncated at t_max; kNoLoop when the geodesic does not loop.
double loop_length(const ProfileMetric& metric, BasePoint base, double psi, double t_max,
                   double loop_tol, const FlowOptions& flow = {});

struct LoopComponent {
  double psi_begin = 0.0;  // refined interval [psi_begin, psi_end], may wrap past 2π
  double psi_end = 0.0;
  double return_time = 0.0;  // mean over the component's loops
  double time_spread = 0.0;  // max - min return time
  std::size_t grid_count = 0;
  bool isolated = false;  // collapsed to the resolution floor: zero measure
  double measure() const { return isolated ? 0.0 : psi_end - psi_begin; }
};

struct LoopsetOptions {
  LoopOptions loop{};
  double cluster_tol = 1e-3;
  double resolution_floor = 2.0 * 3.141592653589793 / 1048576.0;
  // For a sphere-type base point at a pole, return the analytic answer
  // (every direction is a meridian loop) instead of rejecting the input.
  bool allow_pole_analytic = false;
};

struct LoopsetReport {
  BasePoint base;
  double t_max = 0.0;
  int samples = 0;
  std::vector<LoopRecord> loops;
  std::vector<LoopComponent> components;
  double measure_estimate = 0.0;
  std::vector<double> lsp;
  bool analytic_pole = false;
  std::vector<std::string> warnings;
  LoopsetOptions options;
};

LoopsetReport loopset_scan(const ProfileMetric& metric, BasePoint base, double t_max,
                           int n_directions, const LoopsetOptions& options = {});

// CSV columns: psi, return_time, return_angle, clairaut, smooth_closed.
std::string loopset_csv(const LoopsetReport& report);
nlohmann::json loopset_summary(const LoopsetReport& report);

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct JacobiResult {
  // Maps (Y(0), Y'(0)) to (Y(t), Y'(t)).
  Matrix2 transfer{};
  // Zeros in (0, t] of the normal Jacobi field with Y(0) = 0, Y'(0) = 1.
  std::vector<double> conjugate_times;
};

JacobiResult jacobi_transfer(const ProfileMetric& metric, BasePoint base, double psi, double t,
                             const FlowOptions& options = {});

}  // namespace revlab
