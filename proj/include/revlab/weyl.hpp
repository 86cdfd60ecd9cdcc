#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "revlab/spectrum.hpp"

namespace revlab {

struct SurfacePoint {
  double x = 0.0;
  double theta = 0.0;
};

// Local counting function E_λ(x,x), its main term λ²/(4π) and the remainder.
struct WeylSeries {
  SurfacePoint point;
  std::vector<double> lambdas;
  std::vector<double> E;
  std::vector<double> main;
  std::vector<double> R;
  std::vector<std::string> warnings;
};

WeylSeries local_weyl_series(const SpectralTable& table, SurfacePoint point,
                             const std::vector<double>& lambda_grid);

// λ grid containing every cluster eigenvalue and a point just below it, so
// that the jumps of a step function are captured from both sides.
std::vector<double> jump_grid(const SpectralTable& table, double lambda_lo, double lambda_hi);

class NoClusterError : public Error {
 public:
  using Error::Error;
};

struct SupNormResult {
  double value = 0.0;
  double lambda = 0.0;  // cluster eigenvalue
  std::size_t cluster = 0;
  // Coefficients of the unit-norm maximiser in the cluster basis,
  // proportional to conj(φ_ν(x)).
  std::vector<std::complex<double>> coefficients;
};

// sqrt(Σ_{λ_ν = λ} |φ_ν(x)|²): the largest |φ(x)| over unit-norm φ in the
// eigenspace of λ, equal to the square root of the jump of E at λ.
SupNormResult sup_norm_functional(const SpectralTable& table, SurfacePoint point, double lambda);

struct GrowthFit {
  std::vector<std::pair<double, double>> pairs;
  std::vector<std::pair<double, double>> envelope;  // (λ at bin max, bin max)
  double exponent = 0.0;
  double intercept = 0.0;  // natural log
  double residual = 0.0;   // RMS of the log-log fit
  std::string method;
};

// Upper-envelope fit: geometric bins (bins_per_decade per factor 10 in λ,
// anchored at the smallest λ), maximum per bin, least squares of log(max)
// against log(λ at the maximum).
GrowthFit growth_exponent_fit(const std::vector<std::pair<double, double>>& pairs,
                              int bins_per_decade = 8);

struct ReturnMeasure {
  double T = 0.0;
  double lambda = 0.0;
  SurfacePoint point;
  int k_max = 0;
  // coefficients[k + k_max] = μ̂(k), k ∈ [-k_max, k_max].
  std::vector<std::complex<double>> coefficients;
  double max_nonzero = 0.0;  // max_{1≤k≤k_max} |μ̂(k)|

  std::complex<double> at(int k) const { return coefficients.at(static_cast<std::size_t>(k + k_max)); }
};

ReturnMeasure return_time_measure(const SpectralTable& table, SurfacePoint point, double T,
                                  double lambda, int k_max);

struct GlobalWeyl {
  std::vector<double> lambdas;
  std::vector<double> N;
  std::vector<double> main;
  std::vector<double> R;
};

GlobalWeyl global_weyl(const SpectralTable& table, const std::vector<double>& lambda_grid);

// ∬ E_λ(x,x) dA by the table's quadrature.
double integrated_local_weyl(const SpectralTable& table, double lambda);

std::string weyl_csv(const WeylSeries& series);
nlohmann::json fit_summary(const GrowthFit& fit);

}  // namespace revlab
