#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "revlab/lab.hpp"

namespace revlab::lab {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string csv_text(const NamedSeries& series) {
  std::string out;
  for (std::size_t i = 0; i < series.columns.size(); ++i) {
    out += (i ? "," : "") + series.columns[i];
  }
  out += '\n';
  for (const auto& row : series.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt::format("{:.17g}", row[i]);
    out += '\n';
  }
  return out;
}

std::string plot_text(const NamedSeries& series) {
  std::string out = "# " + series.columns.at(0) + " " + series.columns.at(1) + "\n";
  for (const auto& row : series.rows) out += fmt::format("{:.17g} {:.17g}\n", row[0], row[1]);
  return out;
}

nlohmann::json check_json(const Check& c) {
  return {{"name", c.name},      {"description", c.description}, {"value", c.value},
          {"op", c.op},          {"bound", c.bound},             {"target", c.target},
          {"passed", c.passed},  {"note", c.note},               {"source", c.source}};
}

Check check_from_json(const nlohmann::json& j) {
  Check c;
  c.name = j.at("name").get<std::string>();
  c.description = j.at("description").get<std::string>();
  c.value = j.at("value").is_number() ? j.at("value").get<double>() : std::nan("");
  c.op = j.at("op").get<std::string>();
  c.bound = j.at("bound").get<double>();
  c.target = j.at("target").get<double>();
  c.passed = j.at("passed").get<bool>();
  c.note = j.at("note").get<std::string>();
  c.source = j.at("source");
  return c;
}

struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw Error("column '" + name + "' not found");
  }
};

Csv read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  Csv csv;
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + " is empty");
  std::istringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) csv.columns.push_back(field);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
    if (row.size() != csv.columns.size()) throw Error(path.string() + ": ragged row");
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

double recompute_fit(const std::filesystem::path& dir, const nlohmann::json& source) {
  const Csv csv = read_csv(dir / source.at("file").get<std::string>());
  const std::size_t x = csv.index("lambda");
  const std::size_t y = csv.index(source.at("column").get<std::string>());
  const double lo = source.at("lo").get<double>();
  const double hi = source.at("hi").get<double>();
  std::vector<std::pair<double, double>> pairs;
  for (const auto& row : csv.rows) {
    const double v = std::abs(row[y]);
    if (row[x] >= lo && row[x] <= hi && v > 0.0) pairs.push_back({row[x], v});
  }
  return growth_exponent_fit(pairs, source.at("bins_per_decade").get<int>()).exponent;
}

double recompute(const std::filesystem::path& dir, const nlohmann::json& source) {
  const std::string kind = source.at("kind").get<std::string>();
  if (kind == "fit") return recompute_fit(dir, source);
  if (kind == "fit_difference") return recompute_fit(dir, source.at("a")) - recompute_fit(dir, source.at("b"));
  if (kind == "column_max") {
    const Csv csv = read_csv(dir / source.at("file").get<std::string>());
    const std::size_t col = csv.index(source.at("column").get<std::string>());
    double m = 0.0;
    for (const auto& row : csv.rows) m = std::max(m, row[col]);
    return m;
  }
  if (kind == "json_value") {
    const auto j = nlohmann::json::parse(read_file(dir / source.at("file").get<std::string>()));
    return j.at(nlohmann::json::json_pointer(source.at("pointer").get<std::string>())).get<double>();
  }
  if (kind == "mu_max" || kind == "mu_plus_one") {
    const Csv csv = read_csv(dir / source.at("file").get<std::string>());
    const std::size_t k = csv.index("k");
    double m = 0.0;
    for (const auto& row : csv.rows) {
      if (kind == "mu_max" && row[k] >= 1.0) m = std::max(m, row[csv.index("abs")]);
      if (kind == "mu_plus_one" && row[k] == 1.0) {
        return std::hypot(row[csv.index("re")] + 1.0, row[csv.index("im")]);
      }
    }
    if (kind == "mu_plus_one") throw Error("μ̂(1) missing from " + source.at("file").get<std::string>());
    return m;
  }
  throw Error("unknown check source kind '" + kind + "'");
}

}  // namespace

std::filesystem::path export_report(const ScenarioReport& report, const ExportOptions& options) {
  const std::filesystem::path dir = std::filesystem::path(report.config.output_dir) /
                                    (to_string(report.config.scenario) + "-" + report.config_hash.substr(0, 12));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::string> files;
  if (options.csv) {
    for (const NamedSeries& table : report.tables) {
      write_file(dir / (table.name + ".csv"), csv_text(table));
      files.push_back(table.name + ".csv");
    }
    for (const auto& [name, scan] : report.loopsets) {
      write_file(dir / ("loopset_" + name + ".csv"), loopset_csv(scan));
      files.push_back("loopset_" + name + ".csv");
    }
  }
  if (options.json) {
    for (const auto& [name, scan] : report.loopsets) {
      write_file(dir / ("loopset_" + name + ".json"), loopset_summary(scan).dump(2) + "\n");
      files.push_back("loopset_" + name + ".json");
    }
    for (const auto& [name, fit] : report.fits) {
      nlohmann::json j = fit_summary(fit);
      j["fit_lambda_min"] = report.config.fit_lambda_min;
      j["lambda_max"] = report.config.lambda_max;
      write_file(dir / (name + ".json"), j.dump(2) + "\n");
      files.push_back(name + ".json");
    }
  }
  if (options.plotdata) {
    for (const NamedSeries& series : report.plot_data) {
      write_file(dir / (series.name + ".dat"), plot_text(series));
      files.push_back(series.name + ".dat");
    }
  }

  nlohmann::json checks = nlohmann::json::array();
  for (const Check& c : report.checks) checks.push_back(check_json(c));
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& [name, fit] : report.fits) {
    fits[name] = {{"exponent", fit.exponent}, {"residual", fit.residual}};
  }
  nlohmann::json summary = {
      {"version", kVersion},
      {"scenario", to_string(report.config.scenario)},
      {"config", to_json(report.config)},
      {"config_hash", report.config_hash},
      {"table_hash", report.table_hash},
      {"table_source", report.table_source},
      {"all_passed", report.all_passed()},
      {"checks", checks},
      {"failures", report.failures},
      {"notes", report.notes},
      {"fits", fits},
      {"experiments", report.summaries},
      {"files", files},
  };
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  if (options.timings) {
    nlohmann::json timings = {{"runtimes", report.runtimes}, {"cache_hit", report.cache_hit},
                              {"cache_policy", to_string(report.config.cache_policy)}};
    write_file(dir / "timings.json", timings.dump(2) + "\n");
  }
  return dir;
}

bool VerifyResult::ok() const {
  return mismatches.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

VerifyResult verify_report(const std::filesystem::path& directory) {
  const nlohmann::json summary = nlohmann::json::parse(read_file(directory / "summary.json"));
  VerifyResult result;
  for (const nlohmann::json& j : summary.at("checks")) {
    Check c = check_from_json(j);
    if (!c.source.is_null()) {
      try {
        const double value = recompute(directory, c.source);
        if (std::abs(value - c.value) > 1e-12 * std::max(1.0, std::abs(c.value))) {
          result.mismatches.push_back(
              fmt::format("{}: stored {:.17g}, recomputed {:.17g}", c.name, c.value, value));
        }
        c.value = value;
      } catch (const std::exception& e) {
        result.mismatches.push_back(c.name + ": " + e.what());
        c.value = std::nan("");
      }
    }
    const bool passed = evaluate(c);
    if (passed != c.passed) {
      result.mismatches.push_back(c.name + ": stored verdict disagrees with the stored data");
    }
    c.passed = passed;
    result.checks.push_back(c);
  }
  return result;
}

}  // namespace revlab::lab
