#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "revlab/lab.hpp"

namespace revlab::lab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Runner {
  const ScenarioConfig& config;
  ScenarioReport& report;

  // Runs one experiment; an exception becomes a failed check, never a silent gap.
  void run(const std::string& name, const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      report.failures.push_back(name + ": " + e.what());
      Check failed = make_check(name + ".completed", "experiment ran without error", 0.0, ">=", 1.0);
      failed.note = e.what();
      report.checks.push_back(failed);
    }
    report.runtimes[name] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void check(Check c) { report.checks.push_back(std::move(c)); }
};

std::string format_time(double T) { return fmt::format("{:.4f}", T); }

nlohmann::json fit_source(const std::string& file, const std::string& column, double lo, double hi,
                          int bins) {
  return {{"kind", "fit"}, {"file", file}, {"column", column}, {"lo", lo}, {"hi", hi},
          {"bins_per_decade", bins}};
}

nlohmann::json max_source(const std::string& file, const std::string& column) {
  return {{"kind", "column_max"}, {"file", file}, {"column", column}};
}

// Pairs (λ, |value|) with λ in [lo, hi] and a positive value.
std::vector<std::pair<double, double>> fit_pairs(const std::vector<double>& lambdas,
                                                 const std::vector<double>& values, double lo,
                                                 double hi) {
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double v = std::abs(values[i]);
    if (lambdas[i] >= lo && lambdas[i] <= hi && v > 0.0) pairs.push_back({lambdas[i], v});
  }
  return pairs;
}

NamedSeries plot(const std::string& name, const std::vector<double>& x, const std::vector<double>& y,
                 const std::string& ylabel) {
  NamedSeries s{name, {"lambda", ylabel}, {}};
  for (std::size_t i = 0; i < x.size(); ++i) s.rows.push_back({x[i], y[i]});
  return s;
}

bool is_band_point(const NamedPoint& p) { return p.name == "band"; }
bool is_pole(const ProfileMetric& metric, const NamedPoint& p) {
  return metric.topology() == Topology::SphereType && (p.x == 0.0 || p.x == metric.base_length());
}

SpectralTable load_table(const ScenarioConfig& config, const ProfileMetric& metric,
                         ScenarioReport& report) {
  const bool analytic = config.spectral_source == "analytic" ||
                        (config.spectral_source == "auto" &&
                         (config.scenario == Scenario::FlatTorus ||
                          config.scenario == Scenario::RoundSphere));
  if (analytic) {
    report.table_source = "analytic";
    if (config.scenario == Scenario::FlatTorus) {
      return analytic_spectrum(FlatTorus{config.c, config.base_length}, config.lambda_max);
    }
    return analytic_spectrum(RoundSphere{}, config.lambda_max);
  }
  report.table_source = "numeric";
  const std::filesystem::path dir = config.cache_dir.empty()
                                        ? std::filesystem::path(config.output_dir) / "cache"
                                        : std::filesystem::path(config.cache_dir);
  SpectralCache cache{dir};
  if (config.cache_policy == CachePolicy::Use) {
    if (auto table = cache.load(metric, config.lambda_max, config.grid_size, config.cluster_tol)) {
      report.cache_hit = true;
      return std::move(*table);
    }
  }
  SpectralTable table =
      assemble_spectral_table(metric, config.lambda_max, config.grid_size, config.cluster_tol);
  if (config.cache_policy != CachePolicy::Off) cache.store(table, metric);
  return table;
}

// Numeric solver against the closed-form spectrum.
void oracle_checks(Runner& r, const ScenarioConfig& config, const ProfileMetric& metric) {
  const double top = std::min(config.lambda_max, 30.0);
  // Solve slightly past `top` so eigenvalues pushed over it by discretization error are kept.
  const SpectralTable numeric =
      assemble_spectral_table(metric, top * 1.002, config.grid_size, config.cluster_tol);
  NamedSeries rows{"oracle", {"lambda_numeric", "lambda_exact", "rel_error"}, {}};
  double worst = 0.0;
  double multiplicity_defects = 0.0;
  if (config.scenario == Scenario::RoundSphere) {
    std::map<int, int> counts;
    for (const SpectralEntry& e : numeric.entries) {
      const int l = static_cast<int>(std::lround(0.5 * (std::sqrt(1.0 + 4.0 * e.lambda * e.lambda) - 1.0)));
      const double exact = std::sqrt(l * (l + 1.0));
      if (exact > top) continue;
      ++counts[l];
      const double rel = exact > 0.0 ? std::abs(e.lambda - exact) / exact : std::abs(e.lambda);
      worst = std::max(worst, rel);
      rows.rows.push_back({e.lambda, exact, rel});
    }
    for (int l = 0; std::sqrt(l * (l + 1.0)) <= top; ++l) {
      if (counts[l] != 2 * l + 1) multiplicity_defects += 1.0;
    }
  } else {
    const SpectralTable exact = analytic_spectrum(FlatTorus{config.c, config.base_length}, top);
    if (numeric.entries.size() < exact.entries.size()) {
      multiplicity_defects = static_cast<double>(exact.entries.size() - numeric.entries.size());
    }
    std::vector<double> a, b;
    for (const auto& e : numeric.entries) a.push_back(e.lambda);
    for (const auto& e : exact.entries) b.push_back(e.lambda);
    std::sort(a.begin(), a.end());
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      const double rel = b[i] > 0.0 ? std::abs(a[i] - b[i]) / b[i] : std::abs(a[i]);
      worst = std::max(worst, rel);
      rows.rows.push_back({a[i], b[i], rel});
    }
  }
  r.report.tables.push_back(rows);
  Check c = make_check("oracle.relative_error",
                       fmt::format("numeric eigenvalues λ ≤ {} match the exact spectrum", top), worst,
                       "<=", 1e-3);
  c.source = max_source("oracle.csv", "rel_error");
  r.check(c);
  r.check(make_check("oracle.multiplicity_defects",
                     "eigenvalues missing or miscounted against exact multiplicities",
                     multiplicity_defects, "<=", 0.0));
}

void flow_checks(Runner& r, const ScenarioConfig& config, const ProfileMetric& metric) {
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FlowOptions options;
  options.tolerance = config.flow_tol;
  const double T = config.flow_horizon;
  NamedSeries rows{"flow", {"x", "theta", "psi", "h_drift", "clairaut_drift", "reversal"}, {}};
  for (int k = 0; k < 8; ++k) {
    double x = unit(rng) * metric.base_length();
    if (metric.topology() == Topology::SphereType) x = (0.05 + 0.9 * unit(rng)) * metric.base_length();
    const double theta = kTwoPi * unit(rng);
    const double psi = kTwoPi * unit(rng);
    const PhasePoint start = unit_covector(metric, x, theta, psi);
    const FlowResult forward = flow_geodesic(metric, start, T, options);
    PhasePoint back = forward.end;
    back.xi_x = -back.xi_x;
    back.xi_theta = -back.xi_theta;
    const FlowResult returned = flow_geodesic(metric, back, T, options);
    double dx = returned.end.x - start.x;
    if (metric.topology() == Topology::TorusType) dx = std::remainder(dx, metric.base_length());
    const double dtheta = std::remainder(returned.end.theta - start.theta, kTwoPi);
    rows.rows.push_back({x, theta, psi,
                         std::abs(hamiltonian(metric, forward.end) - hamiltonian(metric, start)),
                         std::abs(std::abs(clairaut_integral(metric, forward.end)) -
                                  std::abs(clairaut_integral(metric, start))),
                         std::hypot(dx, metric.a(start.x) * dtheta)});
  }
  auto column_max = [&](std::size_t col) {
    double m = 0.0;
    for (const auto& row : rows.rows) m = std::max(m, row[col]);
    return m;
  };
  r.report.tables.push_back(rows);
  Check h = make_check("flow.hamiltonian_drift",
                       fmt::format("|p(end) - p(start)| over t ∈ [0, {}]", T), column_max(3), "<=",
                       1e-8);
  h.source = max_source("flow.csv", "h_drift");
  Check cl = make_check("flow.clairaut_drift", fmt::format("|ξ_θ| drift over t ∈ [0, {}]", T),
                        column_max(4), "<=", 1e-8);
  cl.source = max_source("flow.csv", "clairaut_drift");
  Check rev = make_check("flow.time_reversal", "distance after flowing forward and back",
                         column_max(5), "<=", 1e-6);
  rev.source = max_source("flow.csv", "reversal");
  r.check(h);
  r.check(cl);
  r.check(rev);

  if (config.scenario == Scenario::RoundSphere) {
    const JacobiResult jacobi = jacobi_transfer(metric, {1.0, 0.0}, 0.3, kTwoPi + 0.5, options);
    double deviation = jacobi.conjugate_times.size() == 2 ? 0.0 : 1.0;
    NamedSeries ct{"conjugate_times", {"index", "time", "expected"}, {}};
    for (std::size_t i = 0; i < jacobi.conjugate_times.size(); ++i) {
      const double expected = kPi * static_cast<double>(i + 1);
      deviation = std::max(deviation, std::abs(jacobi.conjugate_times[i] - expected));
      ct.rows.push_back({static_cast<double>(i), jacobi.conjugate_times[i], expected});
    }
    r.report.tables.push_back(ct);
    r.check(make_check("flow.conjugate_times", "conjugate times along a geodesic are {π, 2π}",
                       deviation, "<=", 1e-4));
  }
}

void loopset_checks(Runner& r, const ScenarioConfig& config, const ProfileMetric& metric) {
  LoopsetOptions options;
  options.loop.loop_tol = config.loop_tol;
  options.loop.flow.tolerance = config.flow_tol;
  options.cluster_tol = config.loop_cluster_tol;
  options.allow_pole_analytic = true;
  NamedSeries components{"components",
                         {"base", "psi_begin", "psi_end", "return_time", "time_spread",
                          "grid_count", "isolated"},
                         {}};
  const std::vector<NamedPoint> bases = resolved_base_points(config);
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const NamedPoint& p = bases[b];
    const LoopsetReport scan =
        loopset_scan(metric, {p.x, p.theta}, config.t_max, config.n_directions, options);
    r.report.loopsets[p.name] = scan;
    for (const LoopComponent& c : scan.components) {
      components.rows.push_back({static_cast<double>(b), c.psi_begin, c.psi_end, c.return_time,
                                 c.time_spread, static_cast<double>(c.grid_count),
                                 c.isolated ? 1.0 : 0.0});
    }
    const std::string file = "loopset_" + p.name + ".json";
    const nlohmann::json source = {{"kind", "json_value"}, {"file", file}, {"pointer", "/measure_estimate"}};
    switch (config.scenario) {
      case Scenario::FlatTorus: {
        Check c = make_check("loopset." + p.name, "flat torus loopset has measure zero",
                             scan.measure_estimate, "<=", 0.02);
        c.source = source;
        r.check(c);
        break;
      }
      case Scenario::RoundSphere: {
        Check c = make_check("loopset." + p.name, "every direction loops on the round sphere",
                             scan.measure_estimate, "within", 0.01 * kTwoPi, kTwoPi);
        c.source = source;
        r.check(c);
        break;
      }
      case Scenario::BridgeTorus: {
        if (!is_band_point(p)) break;
        const double ratio = metric.a(config.band_half_width) / metric.a(0.0);
        const double oracle = 2.0 * (kPi - 2.0 * std::asin(ratio));
        Check c = make_check("loopset." + p.name,
                             "band loopset against the Clairaut trapping set (10%)",
                             scan.measure_estimate, "within", 0.1 * oracle, oracle);
        c.source = source;
        c.note = fmt::format("t_max = {}; measure reported as a function of the time horizon",
                             config.t_max);
        r.check(c);
        double nearest = kNoLoop;
        for (double t : scan.lsp) nearest = std::min(nearest, std::abs(t - kTwoPi));
        r.check(make_check("loopset." + p.name + ".lsp_2pi", "lsp contains 2π",
                           std::isfinite(nearest) ? nearest : 1e300, "<=", 1e-3));
        break;
      }
      case Scenario::PerturbedTorus: {
        if (p.name.rfind("random", 0) != 0) break;
        Check c = make_check("loopset." + p.name, "generic base point: loopset measure near zero",
                             scan.measure_estimate, "<", 0.05);
        c.source = source;
        r.check(c);
        break;
      }
      case Scenario::Custom:
        break;
    }
  }
  double spread = 0.0;
  for (const auto& row : components.rows) spread = std::max(spread, row[4]);
  r.report.tables.push_back(components);
  Check c = make_check("loopset.component_constancy",
                       "return time constant on every loopset component", spread, "<=", 1e-3);
  c.source = max_source("components.csv", "time_spread");
  r.check(c);
}

struct SupData {
  std::vector<double> lambdas;
  std::vector<std::vector<double>> values;  // [point][cluster]
  std::vector<double> max;
};

SupData sup_norms(Runner& r, const ScenarioConfig& config, const SpectralTable& table) {
  SupData data;
  data.values.resize(config.evaluation_points.size());
  NamedSeries rows{"supnorm", {"lambda"}, {}};
  for (const NamedPoint& p : config.evaluation_points) rows.columns.push_back(p.name);
  rows.columns.push_back("max");
  for (const EigenCluster& cluster : table.clusters) {
    if (cluster.lambda <= 0.0 || cluster.lambda > config.lambda_max) continue;
    data.lambdas.push_back(cluster.lambda);
    std::vector<double> row{cluster.lambda};
    double m = 0.0;
    for (std::size_t i = 0; i < config.evaluation_points.size(); ++i) {
      const NamedPoint& p = config.evaluation_points[i];
      const double v = sup_norm_functional(table, {p.x, p.theta}, cluster.lambda).value;
      data.values[i].push_back(v);
      row.push_back(v);
      m = std::max(m, v);
    }
    data.max.push_back(m);
    row.push_back(m);
    rows.rows.push_back(row);
  }
  r.report.tables.push_back(rows);
  r.report.plot_data.push_back(plot("supnorm_max", data.lambdas, data.max, "sup_norm"));
  return data;
}

}  // namespace

Check make_check(std::string name, std::string description, double value, std::string op,
                 double bound, double target, std::string note) {
  Check c;
  c.name = std::move(name);
  c.description = std::move(description);
  c.value = value;
  c.op = std::move(op);
  c.bound = bound;
  c.target = target;
  c.note = std::move(note);
  c.passed = evaluate(c);
  return c;
}

bool evaluate(const Check& c) {
  if (!std::isfinite(c.value)) return false;
  if (c.op == "<=") return c.value <= c.bound;
  if (c.op == "<") return c.value < c.bound;
  if (c.op == ">=") return c.value >= c.bound;
  if (c.op == "within") return std::abs(c.value - c.target) <= c.bound;
  return false;
}

bool ScenarioReport::all_passed() const {
  if (!failures.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
  validate(config);
  ScenarioReport report;
  report.config = config;
  report.config_hash = config_hash(config);
  Runner r{config, report};

  std::optional<ProfileMetric> metric;
  r.run("metric", [&] {
    metric = build_metric(config);
    const ProfileDiagnostics d = profile_diagnostics(*metric, 4096);
    report.summaries["metric"] = {
        {"label", metric->label()},
        {"topology", to_string(metric->topology())},
        {"base_length", metric->base_length()},
        {"area", metric->area()},
        {"parameters", metric->parameters()},
        {"min_a", d.min_a},
        {"max_a", d.max_a},
        {"periodicity_residual", d.periodicity_residual},
        {"pole_residual", d.pole_residual},
        {"derivative_residual", d.derivative_residual},
    };
    NamedSeries k{"curvature", {"x", "K"}, {}};
    for (std::size_t i = 0; i < d.x.size(); i += 16) k.rows.push_back({d.x[i], d.curvature[i]});
    report.plot_data.push_back(k);
  });
  if (!metric) return report;

  r.run("flow", [&] { flow_checks(r, config, *metric); });
  r.run("loopsets", [&] { loopset_checks(r, config, *metric); });
  if (config.scenario == Scenario::FlatTorus || config.scenario == Scenario::RoundSphere) {
    r.run("oracle", [&] { oracle_checks(r, config, *metric); });
  }

  std::optional<SpectralTable> table;
  r.run("spectrum", [&] {
    table = load_table(config, *metric, report);
    report.table_hash = table_hash(*table);
    std::size_t multiple = 0;
    for (const EigenCluster& c : table->clusters) multiple += c.count > 1 ? 1 : 0;
    report.summaries["spectrum"] = {
        {"source", table->source},
        {"entries", table->entries.size()},
        {"clusters", table->clusters.size()},
        {"clusters_with_multiplicity", multiple},
        {"n_max", table->n_max},
        {"grid_size", table->grid_size},
        {"cluster_tol", table->cluster_tol},
        {"lambda_max", table->lambda_max},
        {"table_hash", report.table_hash},
    };
  });
  if (!table) return report;

  const double lo = config.fit_lambda_min;
  const double hi = config.lambda_max;
  const int bins = config.bins_per_decade;

  r.run("trace", [&] {
    NamedSeries rows{"trace", {"lambda", "integrated_E", "N", "rel_error"}, {}};
    double worst = 0.0;
    std::vector<double> probes;
    for (double lambda : {10.0, 20.0, 30.0}) {
      if (lambda <= config.lambda_max) probes.push_back(lambda);
    }
    const GlobalWeyl g = global_weyl(*table, probes);
    for (std::size_t i = 0; i < g.lambdas.size(); ++i) {
      const double integrated = integrated_local_weyl(*table, g.lambdas[i]);
      const double rel = std::abs(integrated - g.N[i]) / std::max(g.N[i], 1.0);
      worst = std::max(worst, rel);
      rows.rows.push_back({g.lambdas[i], integrated, g.N[i], rel});
    }
    report.tables.push_back(rows);
    Check c = make_check("trace.identity", "∬ E_λ(x,x) dA = N(λ) at λ ∈ {10, 20, 30}", worst, "<=", 1e-6);
    c.source = max_source("trace.csv", "rel_error");
    r.check(c);
  });

  std::map<std::string, double> remainder_exponents;
  r.run("weyl", [&] {
    const std::vector<double> grid = jump_grid(*table, 0.0, config.lambda_max);
    for (const NamedPoint& p : config.evaluation_points) {
      const WeylSeries series = local_weyl_series(*table, {p.x, p.theta}, grid);
      NamedSeries rows{"weyl_" + p.name, {"lambda", "E", "main", "R"}, {}};
      for (std::size_t i = 0; i < series.lambdas.size(); ++i) {
        rows.rows.push_back({series.lambdas[i], series.E[i], series.main[i], series.R[i]});
      }
      report.tables.push_back(rows);
      report.plot_data.push_back(plot("remainder_" + p.name, series.lambdas, series.R, "R"));
      for (const std::string& w : series.warnings) report.notes.push_back(p.name + ": " + w);
      const GrowthFit fit = growth_exponent_fit(fit_pairs(series.lambdas, series.R, lo, hi), bins);
      report.fits["remainder_fit_" + p.name] = fit;
      remainder_exponents[p.name] = fit.exponent;
      if (config.scenario == Scenario::RoundSphere && is_pole(*metric, p)) {
        Check c = make_check("remainder." + p.name,
                             fmt::format("|R(λ, pole)| envelope exponent over λ ∈ [{}, {}]", lo, hi),
                             fit.exponent, ">=", 0.9);
        c.source = fit_source(rows.name + ".csv", "R", lo, hi, bins);
        r.check(c);
      }
      if (config.scenario == Scenario::FlatTorus) {
        Check c = make_check("remainder." + p.name,
                             fmt::format("|R(λ, x)| envelope exponent over λ ∈ [{}, {}]", lo, hi),
                             fit.exponent, "<=", 0.8);
        c.source = fit_source(rows.name + ".csv", "R", lo, hi, bins);
        r.check(c);
      }
    }
    const std::vector<double> global_grid = jump_grid(*table, 0.0, config.lambda_max);
    const GlobalWeyl g = global_weyl(*table, global_grid);
    NamedSeries rows{"global_weyl", {"lambda", "N", "main", "R"}, {}};
    for (std::size_t i = 0; i < g.lambdas.size(); ++i) {
      rows.rows.push_back({g.lambdas[i], g.N[i], g.main[i], g.R[i]});
    }
    report.tables.push_back(rows);
    const GrowthFit fit = growth_exponent_fit(fit_pairs(g.lambdas, g.R, lo, hi), bins);
    report.fits["global_remainder_fit"] = fit;

    if (config.scenario == Scenario::BridgeTorus &&
        remainder_exponents.count("band") && remainder_exponents.count("flat")) {
      const double contrast = remainder_exponents["band"] - remainder_exponents["flat"];
      Check c = make_check(
          "remainder.contrast",
          fmt::format("|R| envelope exponent at the band point minus the flat point, λ ∈ [{}, {}]", lo, hi),
          contrast, ">=", 0.15);
      c.source = {{"kind", "fit_difference"},
                  {"a", fit_source("weyl_band.csv", "R", lo, hi, bins)},
                  {"b", fit_source("weyl_flat.csv", "R", lo, hi, bins)}};
      c.note = fmt::format(
          "band {:.4f}, flat {:.4f}; the asserted blow-up is Ω(λ^(1/2)) while the converse of the "
          "remainder theorem suggests the scale λ, so no target exponent is asserted",
          remainder_exponents["band"], remainder_exponents["flat"]);
      r.check(c);
    }
  });

  r.run("supnorm", [&] {
    const SupData data = sup_norms(r, config, *table);
    const GrowthFit fit = growth_exponent_fit(fit_pairs(data.lambdas, data.max, lo, hi), bins);
    report.fits["supnorm_fit"] = fit;
    switch (config.scenario) {
      case Scenario::FlatTorus: {
        Check c = make_check("supnorm.exponent",
                             fmt::format("sup-norm envelope exponent over λ ∈ [{}, {}]", lo, hi),
                             fit.exponent, "<=", 0.2);
        c.source = fit_source("supnorm.csv", "max", lo, hi, bins);
        r.check(c);
        break;
      }
      case Scenario::RoundSphere: {
        for (std::size_t i = 0; i < config.evaluation_points.size(); ++i) {
          const NamedPoint& p = config.evaluation_points[i];
          if (!is_pole(*metric, p)) continue;
          // Clusters ℓ ≤ 30.
          const double top = std::sqrt(30.0 * 31.0) + 1e-9;
          NamedSeries rows{"supnorm_" + p.name, {"lambda", "value", "expected", "deviation"}, {}};
          double worst = 0.0;
          for (std::size_t k = 0; k < data.lambdas.size(); ++k) {
            if (data.lambdas[k] > top) continue;
            const double l = std::round(0.5 * (std::sqrt(1.0 + 4.0 * data.lambdas[k] * data.lambdas[k]) - 1.0));
            const double expected = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi));
            const double dev = std::abs(data.values[i][k] - expected);
            worst = std::max(worst, dev);
            rows.rows.push_back({data.lambdas[k], data.values[i][k], expected, dev});
          }
          report.tables.push_back(rows);
          const double fit_hi = std::min(top, hi);
          const GrowthFit pole =
              growth_exponent_fit(fit_pairs(data.lambdas, data.values[i], lo, fit_hi), bins);
          report.fits["supnorm_fit_" + p.name] = pole;
          Check e = make_check("supnorm." + p.name + ".exponent",
                               fmt::format("zonal saturation: envelope exponent over λ ∈ [{}, {:.4f}]", lo, fit_hi),
                               pole.exponent, "within", 0.05, 0.5);
          e.source = fit_source("supnorm.csv", p.name, lo, fit_hi, bins);
          r.check(e);
          Check v = make_check("supnorm." + p.name + ".values",
                               "pole values equal sqrt((2ℓ+1)/(4π)) for ℓ ≤ 30", worst, "<=", 1e-3);
          v.source = max_source(rows.name + ".csv", "deviation");
          r.check(v);
        }
        break;
      }
      case Scenario::BridgeTorus: {
        Check c = make_check(
            "supnorm.exponent",
            fmt::format("sup-norm envelope exponent over all clusters and points, λ ∈ [{}, {}]", lo, hi),
            fit.exponent, "<=", 0.45);
        c.source = fit_source("supnorm.csv", "max", lo, hi, bins);
        c.note = fmt::format("fitted {:.4f}; proven bound for equivariant modes 0.375, conjectured 0.25, "
                             "maximal growth 0.5",
                             fit.exponent);
        r.check(c);
        break;
      }
      default:
        break;
    }
  });

  r.run("return_measures", [&] {
    for (double T : config.return_times) {
      for (std::size_t i = 0; i < config.evaluation_points.size(); ++i) {
        const NamedPoint& p = config.evaluation_points[i];
        const ReturnMeasure mu = return_time_measure(*table, {p.x, p.theta}, T, config.return_lambda,
                                                     config.k_max);
        const std::string name = "mu_T" + format_time(T) + (i == 0 ? "" : "_" + p.name);
        NamedSeries rows{name, {"k", "re", "im", "abs"}, {}};
        for (int k = -config.k_max; k <= config.k_max; ++k) {
          const auto v = mu.at(k);
          rows.rows.push_back({static_cast<double>(k), v.real(), v.imag(), std::abs(v)});
        }
        report.tables.push_back(rows);
        if (config.scenario == Scenario::FlatTorus) {
          Check c = make_check(fmt::format("mu.T{}.{}", format_time(T), p.name),
                               fmt::format("max_(1≤k≤{}) |μ̂(k)| at λ = {}", config.k_max, config.return_lambda),
                               mu.max_nonzero, "<=", 0.15);
          c.source = {{"kind", "mu_max"}, {"file", name + ".csv"}};
          r.check(c);
        }
        if (config.scenario == Scenario::RoundSphere && is_pole(*metric, p) &&
            std::abs(T - kTwoPi) < 1e-12) {
          Check c = make_check("mu.T" + format_time(T) + "." + p.name,
                               fmt::format("|μ̂(1) + 1| at λ = {}", config.return_lambda),
                               std::abs(mu.at(1) + 1.0), "<=", 0.15);
          c.source = {{"kind", "mu_plus_one"}, {"file", name + ".csv"}};
          r.check(c);
        }
      }
    }
  });

  r.run("lp_norms", [&] {
    NamedSeries rows{"lp_norms", {"lambda", "n", "j", "sup", "l2", "l4", "l6"}, {}};
    int coarse = 0;
    double first_coarse = 0.0;
    for (const SpectralEntry& e : table->entries) {
      if (e.n < 0) continue;
      const ModeStatistics s = mode_statistics(e, table->quadrature);
      rows.rows.push_back({e.lambda, static_cast<double>(e.n), static_cast<double>(e.j), s.sup_norm,
                           s.lp_norms.at(2), s.lp_norms.at(4), s.lp_norms.at(6)});
      if (!s.warnings.empty() && coarse++ == 0) first_coarse = e.lambda;
    }
    if (coarse > 0) {
      report.notes.push_back(fmt::format(
          "lp_norms: {} modes from λ = {:.4f} up have fewer than 10 quadrature points per wavelength",
          coarse, first_coarse));
    }
    report.tables.push_back(rows);
  });

  return report;
}

}  // namespace revlab::lab
