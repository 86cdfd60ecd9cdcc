#include "revlab/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace revlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Number of clusters with eigenvalue ≤ λ.
std::size_t clusters_below(const SpectralTable& table, double lambda) {
  const auto it = std::upper_bound(
      table.clusters.begin(), table.clusters.end(), lambda,
      [](double value, const EigenCluster& c) { return value < c.lambda; });
  return static_cast<std::size_t>(it - table.clusters.begin());
}

std::vector<double> cluster_sums(const SpectralTable& table, const std::vector<double>& density) {
  std::vector<double> sums(table.clusters.size(), 0.0);
  for (std::size_t c = 0; c < table.clusters.size(); ++c) {
    const EigenCluster& cluster = table.clusters[c];
    for (std::size_t k = 0; k < cluster.count; ++k) sums[c] += density[cluster.first + k];
  }
  return sums;
}

}  // namespace

WeylSeries local_weyl_series(const SpectralTable& table, SurfacePoint point,
                             const std::vector<double>& lambda_grid) {
  WeylSeries series;
  series.point = point;
  const std::vector<double> sums = cluster_sums(table, table.densities(point.x));
  std::vector<double> cumulative(sums.size() + 1, 0.0);
  for (std::size_t c = 0; c < sums.size(); ++c) cumulative[c + 1] = cumulative[c] + sums[c];

  const double h = table.resolution();
  bool warned = false;
  for (double lambda : lambda_grid) {
    if (lambda > table.lambda_max * (1.0 + 1e-12) || lambda < 0.0) {
      throw Error("local_weyl_series: λ = " + std::to_string(lambda) +
                  " outside the table range [0, " + std::to_string(table.lambda_max) + "]");
    }
    const double e = cumulative[clusters_below(table, lambda)];
    const double main = lambda * lambda / (4.0 * kPi);
    series.lambdas.push_back(lambda);
    series.E.push_back(e);
    series.main.push_back(main);
    series.R.push_back(e - main);
    if (!warned && h > 0.0 && lambda > 0.0 && h > 2.0 * kPi / lambda / 10.0) {
      std::ostringstream msg;
      msg << "grid spacing " << h << " resolves fewer than 10 points per wavelength at λ = "
          << lambda;
      series.warnings.push_back(msg.str());
      warned = true;
    }
  }
  return series;
}

std::vector<double> jump_grid(const SpectralTable& table, double lambda_lo, double lambda_hi) {
  std::vector<double> grid;
  for (const EigenCluster& cluster : table.clusters) {
    if (cluster.lambda < lambda_lo || cluster.lambda > lambda_hi) continue;
    const double below = cluster.lo - 2.0 * table.cluster_tolerance(cluster.lo) - 1e-12;
    if (below >= lambda_lo) grid.push_back(below);
    grid.push_back(cluster.lambda);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SupNormResult sup_norm_functional(const SpectralTable& table, SurfacePoint point, double lambda) {
  const EigenCluster* cluster = table.find_cluster(lambda);
  if (cluster == nullptr) {
    throw NoClusterError("sup_norm_functional: no eigenvalue cluster at λ = " +
                         std::to_string(lambda));
  }
  SupNormResult result;
  result.lambda = cluster->lambda;
  result.cluster = static_cast<std::size_t>(cluster - table.clusters.data());
  std::vector<std::complex<double>> values(cluster->count);
  double total = 0.0;
  for (std::size_t k = 0; k < cluster->count; ++k) {
    values[k] = table.value(cluster->first + k, point.x, point.theta);
    total += std::norm(values[k]);
  }
  result.value = std::sqrt(total);
  result.coefficients.resize(cluster->count);
  for (std::size_t k = 0; k < cluster->count; ++k) {
    result.coefficients[k] = total > 0.0 ? std::conj(values[k]) / result.value : 0.0;
  }
  return result;
}

GrowthFit growth_exponent_fit(const std::vector<std::pair<double, double>>& pairs,
                              int bins_per_decade) {
  if (bins_per_decade < 1) throw Error("growth_exponent_fit: bins_per_decade must be positive");
  if (pairs.empty()) throw Error("growth_exponent_fit: no data");
  GrowthFit fit;
  fit.pairs = pairs;
  std::ostringstream method;
  method << "upper envelope, " << bins_per_decade << " geometric bins per decade from min λ";
  fit.method = method.str();

  double lambda_min = std::numeric_limits<double>::infinity();
  double lambda_max = 0.0;
  for (const auto& [lambda, value] : pairs) {
    if (!(lambda > 0.0) || !(value > 0.0)) {
      throw Error("growth_exponent_fit: λ and values must be positive");
    }
    lambda_min = std::min(lambda_min, lambda);
    lambda_max = std::max(lambda_max, lambda);
  }
  if (lambda_max <= lambda_min * (1.0 + 1e-12)) {
    throw Error("growth_exponent_fit: degenerate input (constant λ)");
  }

  std::vector<std::pair<double, double>> best;  // per bin
  std::vector<bool> used;
  for (const auto& [lambda, value] : pairs) {
    const auto bin = static_cast<std::size_t>(
        std::floor(std::log10(lambda / lambda_min) * bins_per_decade + 1e-12));
    if (bin >= best.size()) {
      best.resize(bin + 1, {0.0, 0.0});
      used.resize(bin + 1, false);
    }
    if (!used[bin] || value > best[bin].second) {
      best[bin] = {lambda, value};
      used[bin] = true;
    }
  }
  for (std::size_t b = 0; b < best.size(); ++b) {
    if (used[b]) fit.envelope.push_back(best[b]);
  }
  if (fit.envelope.size() < 3) {
    throw Error("growth_exponent_fit: fewer than 3 nonempty bins");
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(fit.envelope.size());
  for (const auto& [lambda, value] : fit.envelope) {
    const double lx = std::log(lambda);
    const double ly = std::log(value);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = count * sxx - sx * sx;
  fit.exponent = (count * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.exponent * sx) / count;
  double ss = 0.0;
  for (const auto& [lambda, value] : fit.envelope) {
    const double r = std::log(value) - (fit.intercept + fit.exponent * std::log(lambda));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / count);
  return fit;
}

ReturnMeasure return_time_measure(const SpectralTable& table, SurfacePoint point, double T,
                                  double lambda, int k_max) {
  if (k_max < 1) throw Error("return_time_measure: k_max must be at least 1");
  if (lambda > table.lambda_max * (1.0 + 1e-12)) {
    throw Error("return_time_measure: λ beyond the table range");
  }
  ReturnMeasure measure;
  measure.T = T;
  measure.lambda = lambda;
  measure.point = point;
  measure.k_max = k_max;
  const std::vector<double> sums = cluster_sums(table, table.densities(point.x));
  const std::size_t included = clusters_below(table, lambda);
  double total = 0.0;
  for (std::size_t c = 0; c < included; ++c) total += sums[c];
  measure.coefficients.assign(static_cast<std::size_t>(2 * k_max + 1), 0.0);
  measure.coefficients[static_cast<std::size_t>(k_max)] = 1.0;
  for (int k = 1; k <= k_max; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t c = 0; c < included; ++c) {
      acc += sums[c] * std::polar(1.0, T * table.clusters[c].lambda * k);
    }
    acc /= total;
    measure.coefficients[static_cast<std::size_t>(k_max + k)] = acc;
    measure.coefficients[static_cast<std::size_t>(k_max - k)] = std::conj(acc);
    measure.max_nonzero = std::max(measure.max_nonzero, std::abs(acc));
  }
  return measure;
}

GlobalWeyl global_weyl(const SpectralTable& table, const std::vector<double>& lambda_grid) {
  GlobalWeyl out;
  std::vector<double> cumulative(table.clusters.size() + 1, 0.0);
  for (std::size_t c = 0; c < table.clusters.size(); ++c) {
    cumulative[c + 1] = cumulative[c] + static_cast<double>(table.clusters[c].count);
  }
  for (double lambda : lambda_grid) {
    if (lambda > table.lambda_max * (1.0 + 1e-12) || lambda < 0.0) {
      throw Error("global_weyl: λ outside the table range");
    }
    const double n = cumulative[clusters_below(table, lambda)];
    const double main = table.area * lambda * lambda / (4.0 * kPi);
    out.lambdas.push_back(lambda);
    out.N.push_back(n);
    out.main.push_back(main);
    out.R.push_back(n - main);
  }
  return out;
}

double integrated_local_weyl(const SpectralTable& table, double lambda) {
  const std::size_t included = clusters_below(table, lambda);
  const std::size_t last =
      included == 0 ? 0 : table.clusters[included - 1].first + table.clusters[included - 1].count;
  double total = 0.0;
  for (std::size_t q = 0; q < table.quadrature.x.size(); ++q) {
    double e = 0.0;
    for (std::size_t k = 0; k < last; ++k) e += std::norm(table.entries[k].mode->value(table.quadrature.x[q]));
    total += table.quadrature.weight[q] * e;
  }
  return total;
}

std::string weyl_csv(const WeylSeries& series) {
  std::ostringstream out;
  out.precision(17);
  out << "lambda,E,main,R\n";
  for (std::size_t i = 0; i < series.lambdas.size(); ++i) {
    out << series.lambdas[i] << ',' << series.E[i] << ',' << series.main[i] << ',' << series.R[i]
        << '\n';
  }
  return out.str();
}

nlohmann::json fit_summary(const GrowthFit& fit) {
  nlohmann::json envelope = nlohmann::json::array();
  for (const auto& [lambda, value] : fit.envelope) envelope.push_back({lambda, value});
  return {{"exponent", fit.exponent},
          {"intercept", fit.intercept},
          {"residual", fit.residual},
          {"method", fit.method},
          {"points", fit.pairs.size()},
          {"envelope", envelope}};
}

}  // namespace revlab
