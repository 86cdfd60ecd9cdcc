#include "revlab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <lapacke.h>

namespace revlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Symmetric operator M = A^{1/2} L_n A^{-1/2} acting on v = √a·u, where L_n is
// the finite-volume form of -(a u')'/a + n²u/a². off[i] couples i and i+1
// (mod size for tori; the last entry is unused for spheres).
struct RadialOperator {
  std::vector<double> diag;
  std::vector<double> off;
  bool periodic = false;
};

RadialOperator build_operator(const RadialGrid& grid, int n) {
  const int size = grid.size;
  const double h2 = grid.step * grid.step;
  const double n2 = static_cast<double>(n) * n;
  RadialOperator op;
  op.periodic = grid.topology == Topology::TorusType;
  op.diag.resize(size);
  op.off.assign(size, 0.0);
  for (int i = 0; i < size; ++i) {
    const double left = i > 0 ? grid.faces[i - 1] : (op.periodic ? grid.faces[size - 1] : 0.0);
    const double right = i < size - 1 || op.periodic ? grid.faces[i] : 0.0;
    op.diag[i] = (left + right) / (h2 * grid.a[i]) + n2 / (grid.a[i] * grid.a[i]);
    if (i < size - 1 || op.periodic) {
      const int next = (i + 1) % size;
      op.off[i] = -grid.faces[i] / (h2 * std::sqrt(grid.a[i] * grid.a[next]));
    }
  }
  return op;
}

// Interleaved ordering 0, N-1, 1, N-2, ... turns a periodic tridiagonal
// matrix into a band matrix with two off-diagonals.
std::vector<int> interleave(int size) {
  std::vector<int> order(size);
  for (int k = 0; k < size; ++k) order[k] = (k % 2 == 0) ? k / 2 : size - 1 - (k - 1) / 2;
  return order;
}

struct BandMatrix {
  int size = 0;
  std::vector<int> order;  // band index -> grid index
  std::vector<int> where;  // grid index -> band index
  // Upper symmetric band storage, kd = 2, column major with ldab = 3.
  std::vector<double> upper;
};

BandMatrix to_band(const RadialOperator& op) {
  const int size = static_cast<int>(op.diag.size());
  BandMatrix band;
  band.size = size;
  band.order = interleave(size);
  band.where.resize(size);
  for (int k = 0; k < size; ++k) band.where[band.order[k]] = k;
  band.upper.assign(static_cast<std::size_t>(3) * size, 0.0);
  auto put = [&](int i, int j, double value) {
    int r = band.where[i];
    int c = band.where[j];
    if (r > c) std::swap(r, c);
    band.upper[static_cast<std::size_t>(2 + r - c) + static_cast<std::size_t>(3) * c] += value;
  };
  for (int i = 0; i < size; ++i) {
    put(i, i, op.diag[i]);
    put(i, (i + 1) % size, op.off[i]);
  }
  return band;
}

std::vector<double> band_eigenvalues(const BandMatrix& band, double upper_bound) {
  std::vector<double> ab = band.upper;
  std::vector<double> w(band.size);
  std::vector<lapack_int> ifail(band.size);
  double q = 0.0;
  double z = 0.0;
  lapack_int found = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  const lapack_int info =
      LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'V', 'U', band.size, 2, ab.data(), 3, &q, 1, -1.0,
                     upper_bound, 0, 0, abstol, &found, w.data(), &z, 1, ifail.data());
  if (info != 0) {
    throw SolverError("banded eigensolver failed (info " + std::to_string(info) + ")");
  }
  w.resize(found);
  return w;
}

std::vector<double> apply(const RadialOperator& op, const std::vector<double>& v) {
  const std::size_t size = v.size();
  std::vector<double> out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = op.diag[i] * v[i];
  const std::size_t links = op.periodic ? size : size - 1;
  for (std::size_t i = 0; i < links; ++i) {
    const std::size_t next = (i + 1) % size;
    out[i] += op.off[i] * v[next];
    out[next] += op.off[i] * v[i];
  }
  return out;
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Inverse iteration on the band form for each eigenvalue; members of a
// numerical cluster are kept orthogonal by Gram–Schmidt.
std::vector<std::vector<double>> band_eigenvectors(const RadialOperator& op, const BandMatrix& band,
                                                   const std::vector<double>& values, int n) {
  const int size = band.size;
  constexpr int kl = 2;
  constexpr int ku = 2;
  constexpr int ldab = 2 * kl + ku + 1;
  double scale = 0.0;
  for (int i = 0; i < size; ++i) {
    scale = std::max(scale, std::abs(op.diag[i]) + 2.0 * std::abs(op.off[i]));
  }
  std::vector<std::vector<double>> vectors;
  vectors.reserve(values.size());
  std::vector<double> ab(static_cast<std::size_t>(ldab) * size);
  std::vector<lapack_int> pivots(size);
  std::mt19937_64 rng(0x5eedULL + static_cast<unsigned>(n));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  for (std::size_t k = 0; k < values.size(); ++k) {
    double shift = values[k];
    for (int attempt = 0;; ++attempt) {
      std::fill(ab.begin(), ab.end(), 0.0);
      for (int c = 0; c < size; ++c) {
        for (int r = std::max(0, c - 2); r <= c; ++r) {
          const double value = band.upper[static_cast<std::size_t>(2 + r - c) + 3u * c];
          const double entry = r == c ? value - shift : value;
          ab[static_cast<std::size_t>(kl + ku + r - c) + static_cast<std::size_t>(ldab) * c] = entry;
          if (r != c) {
            ab[static_cast<std::size_t>(kl + ku + c - r) + static_cast<std::size_t>(ldab) * r] =
                entry;
          }
        }
      }
      const lapack_int info =
          LAPACKE_dgbtrf(LAPACK_COL_MAJOR, size, size, kl, ku, ab.data(), ldab, pivots.data());
      if (info == 0) break;
      if (info < 0 || attempt > 4) {
        throw SolverError("inverse iteration: band factorization failed for n = " +
                          std::to_string(n));
      }
      shift += 4.0 * std::numeric_limits<double>::epsilon() * scale;
    }

    std::vector<double> x(size);
    for (double& xi : x) xi = unit(rng);
    for (int iter = 0; iter < 3; ++iter) {
      const double norm = norm2(x);
      for (double& xi : x) xi /= norm;
      LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', size, kl, ku, 1, ab.data(), ldab, pivots.data(),
                     x.data(), size);
      for (std::size_t prev = 0; prev < k; ++prev) {
        if (std::abs(values[prev] - values[k]) > 1e-5 * (1.0 + std::abs(values[k]))) continue;
        const double dot = std::inner_product(x.begin(), x.end(), vectors[prev].begin(), 0.0);
        for (int i = 0; i < size; ++i) x[i] -= dot * vectors[prev][i];
      }
    }
    const double norm = norm2(x);
    for (double& xi : x) xi /= norm;
    vectors.push_back(std::move(x));
  }

  // Back to grid ordering.
  for (auto& v : vectors) {
    std::vector<double> grid_order(size);
    for (int kb = 0; kb < size; ++kb) grid_order[band.order[kb]] = v[kb];
    v = std::move(grid_order);
  }
  return vectors;
}

struct Eigenpairs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};

Eigenpairs solve_operator(const RadialOperator& op, double upper_bound, bool want_vectors, int n) {
  const int size = static_cast<int>(op.diag.size());
  Eigenpairs result;
  if (!op.periodic) {
    std::vector<double> d = op.diag;
    std::vector<double> e = op.off;
    std::vector<double> w(size);
    std::vector<double> z(want_vectors ? static_cast<std::size_t>(size) * size : 1);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(size));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dstevr(
        LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'V', size, d.data(), e.data(), -1.0,
        upper_bound, 0, 0, 0.0, &found, w.data(), z.data(), want_vectors ? size : 1,
        support.data());
    if (info != 0) {
      throw SolverError("tridiagonal eigensolver failed for n = " + std::to_string(n) + " (info " +
                        std::to_string(info) + ")");
    }
    w.resize(found);
    result.values = w;
    if (want_vectors) {
      for (lapack_int k = 0; k < found; ++k) {
        result.vectors.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(k) * size,
                                    z.begin() + static_cast<std::ptrdiff_t>(k + 1) * size);
      }
    }
    return result;
  }
  const BandMatrix band = to_band(op);
  result.values = band_eigenvalues(band, upper_bound);
  if (want_vectors) result.vectors = band_eigenvectors(op, band, result.values, n);
  return result;
}

// Sign so that u is positive at its first local extremum.
void fix_phase(std::vector<double>& u) {
  const std::size_t size = u.size();
  for (std::size_t i = 0; i < size; ++i) {
    const double here = std::abs(u[i]);
    const double before = i > 0 ? std::abs(u[i - 1]) : 0.0;
    const double after = i + 1 < size ? std::abs(u[i + 1]) : 0.0;
    if (here > 0.0 && here >= before && here >= after) {
      if (u[i] < 0.0) {
        for (double& v : u) v = -v;
      }
      return;
    }
  }
}

class PlaneWave final : public RadialProfile {
 public:
  PlaneWave(double wave_number, double amplitude) : k_(wave_number), amplitude_(amplitude) {}
  std::complex<double> value(double x) const override {
    return std::polar(amplitude_, k_ * x);
  }

 private:
  double k_;
  double amplitude_;
};

class LegendreMode final : public RadialProfile {
 public:
  LegendreMode(int l, int m) : l_(l), m_(m) {}
  std::complex<double> value(double x) const override {
    return normalized_legendre(l_, m_, std::cos(x));
  }

 private:
  int l_;
  int m_;
};

}  // namespace

RadialGrid RadialGrid::build(const ProfileMetric& metric, int size) {
  RadialGrid grid;
  grid.topology = metric.topology();
  grid.base_length = metric.base_length();
  grid.size = size;
  grid.step = grid.base_length / size;
  const bool sphere = grid.topology == Topology::SphereType;
  grid.x.resize(size);
  grid.a.resize(size);
  grid.faces.resize(size);
  for (int i = 0; i < size; ++i) {
    grid.x[i] = sphere ? (i + 0.5) * grid.step : i * grid.step;
    grid.a[i] = metric.a(grid.x[i]);
    const double face = sphere ? (i + 1.0) * grid.step : (i + 0.5) * grid.step;
    grid.faces[i] = (sphere && i == size - 1) ? 0.0 : metric.a(face);
  }
  return grid;
}

double RadialGrid::weight(int i) const { return 2.0 * kPi * a[i] * step; }

double EquivariantMode::sample(long i) const {
  const long size = static_cast<long>(u.size());
  if (grid->topology == Topology::TorusType) {
    long k = i % size;
    if (k < 0) k += size;
    return u[static_cast<std::size_t>(k)];
  }
  const double parity = (n % 2 == 0) ? 1.0 : -1.0;
  if (i < 0) return parity * u[static_cast<std::size_t>(-1 - i)];
  if (i >= size) return parity * u[static_cast<std::size_t>(2 * size - 1 - i)];
  return u[static_cast<std::size_t>(i)];
}

std::complex<double> EquivariantMode::value(double x) const {
  const double offset = grid->topology == Topology::SphereType ? 0.5 : 0.0;
  double position = x / grid->step - offset;
  if (grid->topology == Topology::TorusType) {
    position = std::fmod(position, static_cast<double>(grid->size));
    if (position < 0.0) position += grid->size;
  }
  const double base = std::floor(position);
  const double t = position - base;
  const long i = static_cast<long>(base);
  // Four-point Lagrange interpolation on nodes i-1 .. i+2.
  const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return w0 * sample(i - 1) + w1 * sample(i) + w2 * sample(i + 1) + w3 * sample(i + 2);
}

std::vector<double> equivariant_eigenvalues(const ProfileMetric& metric, int n, int grid_size,
                                            double lambda_max) {
  const RadialGrid grid = RadialGrid::build(metric, grid_size);
  const RadialOperator op = build_operator(grid, n);
  const Eigenpairs pairs = solve_operator(op, lambda_max * lambda_max, false, n);
  std::vector<double> lambdas;
  for (double mu : pairs.values) lambdas.push_back(std::sqrt(std::max(mu, 0.0)));
  std::sort(lambdas.begin(), lambdas.end());
  return lambdas;
}

std::vector<EquivariantMode> solve_equivariant_modes(const ProfileMetric& metric, int n,
                                                     int grid_size, double lambda_max,
                                                     const SolverOptions& options) {
  if (grid_size < 128) throw SolverError("solve_equivariant_modes: grid_size must be at least 128");
  if (!(lambda_max > 0.0)) throw SolverError("solve_equivariant_modes: lambda_max must be positive");

  auto grid = std::make_shared<const RadialGrid>(RadialGrid::build(metric, grid_size));
  const RadialOperator op = build_operator(*grid, n);
  Eigenpairs pairs = solve_operator(op, lambda_max * lambda_max, true, n);

  std::vector<std::size_t> order(pairs.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return pairs.values[l] < pairs.values[r]; });

  double grid_mass = 0.0;
  for (int i = 0; i < grid->size; ++i) grid_mass += grid->weight(i);

  std::vector<EquivariantMode> modes;
  modes.reserve(order.size());
  const double amplitude = 1.0 / std::sqrt(2.0 * kPi * grid->step);
  for (std::size_t k = 0; k < order.size(); ++k) {
    EquivariantMode mode;
    mode.n = n;
    mode.j = static_cast<int>(k);
    mode.grid = grid;
    double mu = pairs.values[order[k]];
    const std::vector<double>& v = pairs.vectors[order[k]];
    const std::vector<double> mv = apply(op, v);
    double res2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) res2 += (mv[i] - mu * v[i]) * (mv[i] - mu * v[i]);
    mode.residual = std::sqrt(res2) / std::max(mu, 1.0);

    mode.u.resize(v.size());
    if (n == 0 && k == 0 && std::abs(mu) < 1e-8) {
      // Constants are harmonic; the discrete operator has √a as exact kernel.
      mu = 0.0;
      std::fill(mode.u.begin(), mode.u.end(), 1.0 / std::sqrt(grid_mass));
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) mode.u[i] = amplitude * v[i] / std::sqrt(grid->a[i]);
      fix_phase(mode.u);
    }
    mode.lambda = std::sqrt(std::max(mu, 0.0));
    double mass = 0.0;
    for (int i = 0; i < grid->size; ++i) mass += grid->weight(i) * mode.u[i] * mode.u[i];
    mode.norm_check = std::abs(mass - 1.0);
    if (mode.residual > 1e-6) {
      std::ostringstream msg;
      msg << "eigenpair residual " << mode.residual << " too large for n = " << n
          << ", j = " << k << " on grid " << grid_size;
      throw SolverError(msg.str());
    }
    modes.push_back(std::move(mode));
  }

  if (options.check_convergence) {
    const auto fine = equivariant_eigenvalues(metric, n, 2 * grid_size, lambda_max);
    const std::size_t common = std::min(fine.size(), modes.size());
    // The last one or two may sit on either side of the cutoff.
    for (std::size_t k = 0; k + 1 < common; ++k) {
      const double drift = std::abs(modes[k].lambda - fine[k]) / std::max(fine[k], 1.0);
      if (drift > options.accuracy_target) {
        std::ostringstream msg;
        msg << "grid " << grid_size << " too coarse for n = " << n << ": eigenvalue " << k
            << " moves by " << drift << " (relative) when the grid is doubled";
        throw SolverError(msg.str());
      }
    }
  }
  return modes;
}

const EigenCluster* SpectralTable::find_cluster(double lambda) const {
  auto it = std::lower_bound(clusters.begin(), clusters.end(), lambda,
                             [&](const EigenCluster& c, double value) {
                               return c.hi + cluster_tolerance(c.hi) < value;
                             });
  if (it == clusters.end()) return nullptr;
  const double tol = cluster_tolerance(lambda);
  if (lambda < it->lo - tol || lambda > it->hi + tol) return nullptr;
  return &*it;
}

std::vector<double> SpectralTable::densities(double x) const {
  std::vector<double> out(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) out[k] = std::norm(entries[k].mode->value(x));
  return out;
}

std::complex<double> SpectralTable::value(std::size_t entry, double x, double theta) const {
  const SpectralEntry& e = entries.at(entry);
  return e.mode->value(x) * std::polar(1.0, static_cast<double>(e.n) * theta);
}

double SpectralTable::resolution() const {
  if (grid_size > 0) return base_length / grid_size;
  return 0.0;
}

void finalize_table(SpectralTable& table) {
  auto& entries = table.entries;
  std::stable_sort(entries.begin(), entries.end(), [](const SpectralEntry& l, const SpectralEntry& r) {
    if (l.lambda != r.lambda) return l.lambda < r.lambda;
    if (std::abs(l.n) != std::abs(r.n)) return std::abs(l.n) < std::abs(r.n);
    if (l.n != r.n) return l.n < r.n;
    return l.j < r.j;
  });
  table.clusters.clear();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double lambda = entries[k].lambda;
    if (!table.clusters.empty()) {
      EigenCluster& last = table.clusters.back();
      if (lambda - last.hi <= table.cluster_tolerance(last.hi)) {
        last.hi = lambda;
        ++last.count;
        entries[k].cluster = table.clusters.size() - 1;
        continue;
      }
    }
    table.clusters.push_back({lambda, lambda, lambda, k, 1});
    entries[k].cluster = table.clusters.size() - 1;
  }
  for (auto& cluster : table.clusters) {
    // Offsets from lo keep an exactly degenerate cluster at its exact value.
    double sum = 0.0;
    for (std::size_t k = 0; k < cluster.count; ++k) sum += entries[cluster.first + k].lambda - cluster.lo;
    cluster.lambda = cluster.lo + sum / static_cast<double>(cluster.count);
  }
}

SpectralTable table_from_modes(const ProfileMetric& metric,
                               std::vector<std::shared_ptr<const EquivariantMode>> modes,
                               double lambda_max, int grid_size, double cluster_tol) {
  SpectralTable table;
  table.metric_label = metric.label();
  table.source = "numeric";
  table.topology = metric.topology();
  table.base_length = metric.base_length();
  table.area = metric.area();
  table.lambda_max = lambda_max;
  table.grid_size = grid_size;
  table.cluster_tol = cluster_tol;
  table.n_max = static_cast<int>(std::ceil(lambda_max * metric.max_a()));
  for (const auto& mode : modes) {
    if (mode->lambda > lambda_max) continue;
    table.entries.push_back({mode->lambda, mode->n, mode->j, 0, mode});
    if (mode->n != 0) table.entries.push_back({mode->lambda, -mode->n, mode->j, 0, mode});
  }
  if (!modes.empty()) {
    const RadialGrid& grid = *modes.front()->grid;
    table.quadrature.x = grid.x;
    for (int i = 0; i < grid.size; ++i) table.quadrature.weight.push_back(grid.weight(i));
  }
  table.modes = std::move(modes);
  finalize_table(table);
  return table;
}

SpectralTable assemble_spectral_table(const ProfileMetric& metric, double lambda_max,
                                      int grid_size, double cluster_tol,
                                      const SolverOptions& options) {
  if (!(lambda_max > 0.0)) throw SolverError("assemble_spectral_table: lambda_max must be positive");
  const int n_max = static_cast<int>(std::ceil(lambda_max * metric.max_a()));
  std::vector<std::vector<EquivariantMode>> per_n(static_cast<std::size_t>(n_max) + 1);
  std::vector<std::string> failures(per_n.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int n = 0; n <= n_max; ++n) {
    try {
      per_n[n] = solve_equivariant_modes(metric, n, grid_size, lambda_max, options);
    } catch (const std::exception& e) {
      failures[n] = e.what();
    }
  }
  for (const auto& failure : failures) {
    if (!failure.empty()) throw SolverError(failure);
  }
  std::vector<std::shared_ptr<const EquivariantMode>> modes;
  const double max_a = metric.max_a();
  for (int n = 0; n <= n_max; ++n) {
    for (auto& mode : per_n[n]) {
      // λ² ≥ n²/max(a)² holds for the discrete operator as well.
      if (mode.lambda * max_a < n * (1.0 - 1e-9)) {
        throw SolverError("n cutoff bound violated by mode n = " + std::to_string(n) +
                          ", j = " + std::to_string(mode.j));
      }
      modes.push_back(std::make_shared<const EquivariantMode>(std::move(mode)));
    }
  }
  return table_from_modes(metric, std::move(modes), lambda_max, grid_size, cluster_tol);
}

double normalized_legendre(int l, int m, double t) {
  m = std::abs(m);
  if (l < m) return 0.0;
  const double s2 = std::max(0.0, 1.0 - t * t);
  // P̄_m^m
  double pmm = 1.0 / (4.0 * kPi);
  for (int k = 1; k <= m; ++k) pmm *= (2.0 * k - 1.0) / (2.0 * k) * s2;
  pmm = std::sqrt((2.0 * m + 1.0) * pmm);
  if (l == m) return pmm;
  double prev = pmm;
  double curr = t * std::sqrt(2.0 * m + 3.0) * pmm;
  for (int ll = m + 2; ll <= l; ++ll) {
    const double l2 = static_cast<double>(ll) * ll;
    const double m2 = static_cast<double>(m) * m;
    const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
    const double lm1 = ll - 1.0;
    const double b = std::sqrt((lm1 * lm1 - m2) / (4.0 * lm1 * lm1 - 1.0));
    const double next = a * (t * curr - b * prev);
    prev = curr;
    curr = next;
  }
  return curr;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

Quadrature uniform_quadrature(const ProfileMetric& metric, int size) {
  Quadrature q;
  const double h = metric.base_length() / size;
  const bool sphere = metric.topology() == Topology::SphereType;
  for (int i = 0; i < size; ++i) {
    const double x = sphere ? (i + 0.5) * h : i * h;
    q.x.push_back(x);
    q.weight.push_back(2.0 * kPi * metric.a(x) * h);
  }
  return q;
}

SpectralTable analytic_spectrum(const AnalyticKind& kind, double lambda_max, double cluster_tol) {
  if (!(lambda_max > 0.0)) throw Error("analytic_spectrum: lambda_max must be positive");
  SpectralTable table;
  table.source = "analytic";
  table.lambda_max = lambda_max;
  table.cluster_tol = cluster_tol;
  if (const auto* flat = std::get_if<FlatTorus>(&kind)) {
    const double c = flat->c;
    const double length = flat->base_length;
    if (!(c > 0.0 && length > 0.0)) throw Error("analytic_spectrum: flat torus needs c, L > 0");
    table.metric_label = "flat-torus";
    table.topology = Topology::TorusType;
    table.base_length = length;
    table.area = 2.0 * kPi * c * length;
    const double unit = 2.0 * kPi / length;
    const int k_max = static_cast<int>(std::floor(lambda_max / unit));
    const int n_max = static_cast<int>(std::floor(lambda_max * c));
    table.n_max = n_max;
    const double amplitude = 1.0 / std::sqrt(table.area);
    for (int n = -n_max; n <= n_max; ++n) {
      for (int k = -k_max; k <= k_max; ++k) {
        const double lambda2 = unit * unit * k * k + static_cast<double>(n) * n / (c * c);
        if (lambda2 > lambda_max * lambda_max) continue;
        const int j = k == 0 ? 0 : (k > 0 ? 2 * k - 1 : -2 * k);
        table.entries.push_back({std::sqrt(lambda2), n, j, 0,
                                 std::make_shared<PlaneWave>(unit * k, amplitude)});
      }
    }
    const int nodes = std::max(64, 4 * k_max + 8);
    for (int i = 0; i < nodes; ++i) {
      table.quadrature.x.push_back(length * i / nodes);
      table.quadrature.weight.push_back(table.area / nodes);
    }
  } else {
    table.metric_label = "round-sphere";
    table.topology = Topology::SphereType;
    table.base_length = kPi;
    table.area = 4.0 * kPi;
    int l_max = 0;
    while (static_cast<double>(l_max + 1) * (l_max + 2) <= lambda_max * lambda_max) ++l_max;
    table.n_max = l_max;
    for (int l = 0; l <= l_max; ++l) {
      const double lambda = std::sqrt(static_cast<double>(l) * (l + 1));
      for (int m = -l; m <= l; ++m) {
        table.entries.push_back({lambda, m, l - std::abs(m), 0, std::make_shared<LegendreMode>(l, m)});
      }
    }
    std::vector<double> t;
    std::vector<double> w;
    gauss_legendre(std::max(64, 4 * (l_max + 1)), t, w);
    for (std::size_t i = 0; i < t.size(); ++i) {
      table.quadrature.x.push_back(std::acos(t[i]));
      table.quadrature.weight.push_back(2.0 * kPi * w[i]);
    }
  }
  finalize_table(table);
  return table;
}

ModeStatistics mode_statistics(const SpectralEntry& entry, const Quadrature& grid) {
  ModeStatistics stats;
  double s2 = 0.0;
  double s4 = 0.0;
  double s6 = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const double modulus = std::abs(entry.mode->value(grid.x[i]));
    if (modulus > stats.sup_norm) {
      stats.sup_norm = modulus;
      stats.argmax_x = grid.x[i];
    }
    const double m2 = modulus * modulus;
    s2 += grid.weight[i] * m2;
    s4 += grid.weight[i] * m2 * m2;
    s6 += grid.weight[i] * m2 * m2 * m2;
  }
  stats.lp_norms[2] = std::sqrt(s2);
  stats.lp_norms[4] = std::pow(s4, 0.25);
  stats.lp_norms[6] = std::pow(s6, 1.0 / 6.0);
  if (grid.x.size() > 1 && entry.lambda > 0.0) {
    double spacing = 0.0;
    for (std::size_t i = 1; i < grid.x.size(); ++i) {
      spacing = std::max(spacing, std::abs(grid.x[i] - grid.x[i - 1]));
    }
    const double wavelength = 2.0 * kPi / entry.lambda;
    if (spacing > wavelength / 10.0) {
      std::ostringstream msg;
      msg << "evaluation grid spacing " << spacing << " exceeds a tenth of the wavelength "
          << wavelength;
      stats.warnings.push_back(msg.str());
    }
  }
  return stats;
}

double lp_exponent(double p, int dim) {
  const double n = dim;
  const double critical = 2.0 * (n + 1.0) / (n - 1.0);
  if (p == 0.0 || std::isinf(p)) return 0.5 * (n - 1.0);
  if (p < 2.0) throw Error("lp_exponent: p must be at least 2");
  if (p >= critical) return n * (0.5 - 1.0 / p) - 0.5;
  return 0.5 * (n - 1.0) * (0.5 - 1.0 / p);
}

}  // namespace revlab
