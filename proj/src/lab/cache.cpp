#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "revlab/lab.hpp"

namespace revlab::lab {

namespace {

constexpr int kCacheFormat = 1;

// Exclusive advisory lock held for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw Error("cache: cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error("cache: cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

nlohmann::json key_material(const ProfileMetric& metric, double lambda_max, int grid_size,
                            double cluster_tol) {
  // A few profile samples guard against two metrics sharing a label and parameters.
  std::vector<std::string> samples;
  for (int i = 0; i <= 16; ++i) {
    samples.push_back(fmt::format("{:.17g}", metric.a(metric.base_length() * i / 16.0)));
  }
  return {{"format", kCacheFormat},
          {"label", metric.label()},
          {"parameters", metric.parameters()},
          {"topology", to_string(metric.topology())},
          {"base_length", fmt::format("{:.17g}", metric.base_length())},
          {"lambda_max", fmt::format("{:.17g}", lambda_max)},
          {"grid_size", grid_size},
          {"cluster_tol", fmt::format("{:.17g}", cluster_tol)},
          {"samples", samples}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace

std::string table_hash(const SpectralTable& table) {
  std::string text = table.source + "\n";
  for (const SpectralEntry& e : table.entries) {
    text += fmt::format("{:.17g},{},{}\n", e.lambda, e.n, e.j);
  }
  for (const auto& mode : table.modes) {
    text += fmt::format("{},{}", mode->n, mode->j);
    for (double v : mode->u) text += fmt::format(",{:.17g}", v);
    text += '\n';
  }
  return sha256_hex(text);
}

std::string SpectralCache::key(const ProfileMetric& metric, double lambda_max, int grid_size,
                               double cluster_tol) {
  return sha256_hex(key_material(metric, lambda_max, grid_size, cluster_tol).dump()).substr(0, 24);
}

std::optional<SpectralTable> SpectralCache::load(const ProfileMetric& metric, double lambda_max,
                                                 int grid_size, double cluster_tol) const {
  const std::string k = key(metric, lambda_max, grid_size, cluster_tol);
  const std::filesystem::path entry = directory / k;
  if (!std::filesystem::exists(entry / "header.json")) return std::nullopt;
  std::filesystem::create_directories(directory);
  FileLock lock(directory / (k + ".lock"));

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_file(entry / "header.json"));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (header.value("format", 0) != kCacheFormat ||
      header.value("key", nlohmann::json()) != key_material(metric, lambda_max, grid_size, cluster_tol)) {
    return std::nullopt;
  }

  auto grid = std::make_shared<const RadialGrid>(RadialGrid::build(metric, grid_size));
  const nlohmann::json& checks = header.at("modes");
  std::ifstream csv(entry / "modes.csv");
  std::string line;
  std::getline(csv, line);  // header row
  std::vector<std::shared_ptr<const EquivariantMode>> modes;
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    auto mode = std::make_shared<EquivariantMode>();
    std::istringstream fields(line);
    std::string field;
    std::getline(fields, field, ',');
    mode->n = std::stoi(field);
    std::getline(fields, field, ',');
    mode->j = std::stoi(field);
    std::getline(fields, field, ',');
    mode->lambda = std::stod(field);
    mode->u.reserve(static_cast<std::size_t>(grid_size));
    while (std::getline(fields, field, ',')) mode->u.push_back(std::stod(field));
    if (mode->u.size() != static_cast<std::size_t>(grid_size) || row >= checks.size()) {
      return std::nullopt;
    }
    mode->norm_check = checks[row].at(0).get<double>();
    mode->residual = checks[row].at(1).get<double>();
    mode->grid = grid;
    modes.push_back(std::move(mode));
    ++row;
  }
  if (row != checks.size()) return std::nullopt;
  SpectralTable table = table_from_modes(metric, std::move(modes), lambda_max, grid_size, cluster_tol);
  // A corrupted or stale entry is recomputed rather than trusted.
  if (table_hash(table) != header.value("table_hash", std::string())) return std::nullopt;
  return table;
}

void SpectralCache::store(const SpectralTable& table, const ProfileMetric& metric) const {
  if (table.source != "numeric") throw Error("cache: only numeric tables are cached");
  const std::string k = key(metric, table.lambda_max, table.grid_size, table.cluster_tol);
  std::filesystem::create_directories(directory);
  FileLock lock(directory / (k + ".lock"));

  const std::filesystem::path entry = directory / k;
  const std::filesystem::path staging = directory / (k + ".tmp");
  std::filesystem::remove_all(staging);
  std::filesystem::create_directories(staging);

  nlohmann::json checks = nlohmann::json::array();
  {
    std::ofstream csv(staging / "modes.csv");
    csv << "n,j,lambda";
    for (int i = 0; i < table.grid_size; ++i) csv << ",u" << i;
    csv << '\n';
    for (const auto& mode : table.modes) {
      std::string line = fmt::format("{},{},{:.17g}", mode->n, mode->j, mode->lambda);
      for (double v : mode->u) line += fmt::format(",{:.17g}", v);
      csv << line << '\n';
      checks.push_back({mode->norm_check, mode->residual});
    }
    if (!csv) throw Error("cache: failed writing " + (staging / "modes.csv").string());
  }
  nlohmann::json header = {
      {"format", kCacheFormat},
      {"version", kVersion},
      {"key", key_material(metric, table.lambda_max, table.grid_size, table.cluster_tol)},
      {"metric_label", table.metric_label},
      {"table_hash", table_hash(table)},
      {"modes", checks},
  };
  {
    std::ofstream out(staging / "header.json");
    out << header.dump(1) << '\n';
    if (!out) throw Error("cache: failed writing " + (staging / "header.json").string());
  }
  std::filesystem::remove_all(entry);
  std::filesystem::rename(staging, entry);
}

}  // namespace revlab::lab
