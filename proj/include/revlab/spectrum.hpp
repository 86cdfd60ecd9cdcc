#pragma once

#include <complex>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "revlab/geometry.hpp"

namespace revlab {

class SolverError : public Error {
 public:
  using Error::Error;
};

// Radial factor u(x) of an equivariant eigenfunction Φ(x, θ) = e^{inθ} u(x).
class RadialProfile {
 public:
  virtual ~RadialProfile() = default;
  virtual std::complex<double> value(double x) const = 0;
};

// Base grid for the radial problem. Sphere-type metrics use the half-offset
// grid x_i = (i + ½)h so that a(x_i) > 0; torus-type metrics use x_i = ih.
struct RadialGrid {
  Topology topology = Topology::TorusType;
  double base_length = 0.0;
  int size = 0;
  double step = 0.0;
  std::vector<double> x;
  std::vector<double> a;
  // a at the cell faces x_{i+½}; faces[i] sits between nodes i and i+1.
  std::vector<double> faces;

  static RadialGrid build(const ProfileMetric& metric, int size);
  // Surface quadrature weight 2π a(x_i) h.
  double weight(int i) const;
};

struct EquivariantMode final : RadialProfile {
  int n = 0;
  int j = 0;
  double lambda = 0.0;
  std::shared_ptr<const RadialGrid> grid;
  std::vector<double> u;
  // |∬|e^{inθ}u|² a dx dθ - 1| on the grid.
  double norm_check = 0.0;
  // ‖L_n u - λ²u‖₂ / max(λ², 1) for the discrete operator.
  double residual = 0.0;

  // Cubic interpolation; pole ghosts use the parity (-1)^n, tori wrap.
  std::complex<double> value(double x) const override;
  double sample(long i) const;
};

struct SolverOptions {
  // Re-solve on the doubled grid and fail if any eigenvalue moves by more
  // than accuracy_target (relative).
  bool check_convergence = false;
  double accuracy_target = 1e-3;
};

std::vector<EquivariantMode> solve_equivariant_modes(const ProfileMetric& metric, int n,
                                                     int grid_size, double lambda_max,
                                                     const SolverOptions& options = {});

// Eigenvalues λ ≤ lambda_max of the discrete radial operator only.
std::vector<double> equivariant_eigenvalues(const ProfileMetric& metric, int n, int grid_size,
                                            double lambda_max);

struct SpectralEntry {
  double lambda = 0.0;
  int n = 0;
  int j = 0;
  std::size_t cluster = 0;
  std::shared_ptr<const RadialProfile> mode;
};

struct EigenCluster {
  double lambda = 0.0;  // mean of the members
  double lo = 0.0;
  double hi = 0.0;
  std::size_t first = 0;
  std::size_t count = 0;
};

// Quadrature on the surface for functions of the form |e^{inθ}u(x)|^p:
// weights already include 2π a(x) dx.
struct Quadrature {
  std::vector<double> x;
  std::vector<double> weight;
};

Quadrature uniform_quadrature(const ProfileMetric& metric, int size);

struct SpectralTable {
  std::string metric_label;
  std::string source;  // "numeric" or "analytic"
  Topology topology = Topology::TorusType;
  double base_length = 0.0;
  double area = 0.0;
  double lambda_max = 0.0;
  int n_max = 0;
  int grid_size = 0;
  double cluster_tol = 1e-6;
  std::vector<SpectralEntry> entries;
  std::vector<EigenCluster> clusters;
  Quadrature quadrature;
  // Numeric tables: the solved modes for n ≥ 0 (entries for ±n share them).
  std::vector<std::shared_ptr<const EquivariantMode>> modes;

  double cluster_tolerance(double lambda) const { return cluster_tol * (1.0 + lambda); }
  // Cluster containing λ within cluster tolerance, or nullptr.
  const EigenCluster* find_cluster(double lambda) const;
  // |φ_ν(x, ·)|² for every entry.
  std::vector<double> densities(double x) const;
  std::complex<double> value(std::size_t entry, double x, double theta) const;
  // Smallest spacing of the evaluation data, used for resolution warnings.
  double resolution() const;
};

// Sorts entries by (λ, |n|, n, j) and groups eigenvalues closer than
// cluster_tol·(1 + λ) into clusters.
void finalize_table(SpectralTable& table);

SpectralTable table_from_modes(const ProfileMetric& metric,
                               std::vector<std::shared_ptr<const EquivariantMode>> modes,
                               double lambda_max, int grid_size, double cluster_tol);

SpectralTable assemble_spectral_table(const ProfileMetric& metric, double lambda_max,
                                      int grid_size, double cluster_tol = 1e-6,
                                      const SolverOptions& options = {});

using AnalyticKind = std::variant<FlatTorus, RoundSphere>;

SpectralTable analytic_spectrum(const AnalyticKind& kind, double lambda_max,
                                double cluster_tol = 1e-9);

// Orthonormal associated Legendre function: Y_ℓ^m(x, θ) = P̄_ℓ^|m|(cos x) e^{imθ}.
double normalized_legendre(int l, int m, double t);

// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct ModeStatistics {
  double sup_norm = 0.0;
  double argmax_x = 0.0;
  std::map<int, double> lp_norms;  // p ∈ {2, 4, 6}
  std::vector<std::string> warnings;
};

ModeStatistics mode_statistics(const SpectralEntry& entry, const Quadrature& grid);

// L^p growth exponent δ(p) for dimension `dim`; p = 0 encodes p = ∞.
double lp_exponent(double p, int dim = 2);

}  // namespace revlab
