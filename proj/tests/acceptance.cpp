// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "revlab/lab.hpp"

using namespace revlab;
using namespace revlab::lab;

namespace {

struct Run {
  ScenarioReport report;
  double seconds = 0.0;
};

struct Line {
  bool ok = true;
  std::vector<std::string> parts;

  void add(bool passed, const std::string& text) {
    ok = ok && passed;
    parts.push_back(text);
  }
};

std::map<Scenario, Run> runs;

// Every check whose name starts with `prefix`; a missing check fails the line.
void require(Line& line, Scenario s, const std::string& prefix, const std::string& label = {}) {
  int seen = 0;
  for (const Check& c : runs.at(s).report.checks) {
    if (c.name.rfind(prefix, 0) != 0) continue;
    ++seen;
    line.add(c.passed, fmt::format("{}{} {:.4g}{}{}", label.empty() ? "" : label + ":", c.name, c.value,
                                   c.passed ? "" : " (bound ", c.passed ? "" : fmt::format("{} {:.4g})", c.op, c.bound)));
    if (!c.note.empty()) line.parts.push_back("  " + c.note);
  }
  if (seen == 0) line.add(false, fmt::format("{}:{} missing", to_string(s), prefix));
}

void budget(Line& line, double seconds, double limit) {
  line.add(seconds <= limit, fmt::format("runtime {:.1f}s (budget {:.0f}s)", seconds, limit));
}

void errors(Line& line, Scenario s) {
  for (const std::string& f : runs.at(s).report.failures) line.add(false, to_string(s) + " error: " + f);
}

// The lattice spectrum of the standard flat torus, enumerated directly.
void flat_analytic(Line& line) {
  const double lambda_max = 40.0;
  std::vector<double> expected;
  const int r = static_cast<int>(lambda_max);
  for (int m = -r; m <= r; ++m) {
    for (int k = -r; k <= r; ++k) {
      if (m * m + k * k <= r * r) expected.push_back(std::sqrt(static_cast<double>(m * m + k * k)));
    }
  }
  std::sort(expected.begin(), expected.end());
  const SpectralTable t = analytic_spectrum(FlatTorus{}, lambda_max);
  double worst = expected.size() == t.entries.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(expected.size(), t.entries.size()); ++i) {
    worst = std::max(worst, std::abs(t.entries[i].lambda - expected[i]));
  }
  line.add(worst <= 1e-12, fmt::format("flat analytic: {} eigenvalues, max deviation {:.2g}", t.entries.size(), worst));
}

}  // namespace

int main() {
  const auto out = std::filesystem::temp_directory_path() / "revlab-acceptance";
  std::filesystem::remove_all(out);
  for (Scenario s : {Scenario::FlatTorus, Scenario::RoundSphere, Scenario::BridgeTorus,
                     Scenario::PerturbedTorus, Scenario::Custom}) {
    ScenarioConfig config = default_config(s);
    config.output_dir = out.string();
    config.cache_policy = CachePolicy::Off;
    const auto start = std::chrono::steady_clock::now();
    Run run{run_scenario(config), 0.0};
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    export_report(run.report);
    std::fprintf(stderr, "%s: %.1fs\n", to_string(s).c_str(), run.seconds);
    runs.emplace(s, std::move(run));
  }
  const auto time_of = [](Scenario s, const std::string& experiment) {
    const auto& t = runs.at(s).report.runtimes;
    return t.count(experiment) ? t.at(experiment) : 0.0;
  };
  const std::vector<Scenario> all = {Scenario::FlatTorus, Scenario::RoundSphere, Scenario::BridgeTorus,
                                     Scenario::PerturbedTorus, Scenario::Custom};

  std::vector<std::pair<int, Line>> lines;

  Line c1;
  require(c1, Scenario::RoundSphere, "oracle.", "sphere");
  require(c1, Scenario::FlatTorus, "oracle.", "flat");
  flat_analytic(c1);
  budget(c1, time_of(Scenario::RoundSphere, "oracle") + time_of(Scenario::FlatTorus, "oracle"), 120.0);
  lines.push_back({1, c1});

  Line c2;
  require(c2, Scenario::RoundSphere, "supnorm.pole.");
  lines.push_back({2, c2});

  Line c3;
  require(c3, Scenario::FlatTorus, "supnorm.exponent");
  require(c3, Scenario::FlatTorus, "remainder.");
  lines.push_back({3, c3});

  Line c4;
  require(c4, Scenario::RoundSphere, "loopset.mid", "sphere");
  require(c4, Scenario::FlatTorus, "loopset.origin", "flat");
  require(c4, Scenario::BridgeTorus, "loopset.band", "bridge");
  budget(c4, time_of(Scenario::BridgeTorus, "loopsets"), 180.0);
  lines.push_back({4, c4});

  Line c5;
  require(c5, Scenario::BridgeTorus, "loopset.band", "a");
  require(c5, Scenario::BridgeTorus, "remainder.contrast", "b");
  require(c5, Scenario::BridgeTorus, "supnorm.exponent", "c");
  errors(c5, Scenario::BridgeTorus);
  budget(c5, runs.at(Scenario::BridgeTorus).seconds, 600.0);
  lines.push_back({5, c5});

  Line c6;
  require(c6, Scenario::FlatTorus, "mu.", "flat");
  require(c6, Scenario::RoundSphere, "mu.", "sphere");
  lines.push_back({6, c6});

  Line c7;
  for (Scenario s : all) require(c7, s, "flow.", to_string(s));
  lines.push_back({7, c7});

  Line c8;
  for (Scenario s : all) require(c8, s, "trace.identity", to_string(s));
  lines.push_back({8, c8});

  Line c9;
  for (Scenario s : all) require(c9, s, "loopset.component_constancy", to_string(s));
  lines.push_back({9, c9});

  bool ok = true;
  for (const auto& [n, line] : lines) {
    ok = ok && line.ok;
    std::printf("criterion %d: %s\n", n, line.ok ? "PASS" : "FAIL");
    for (const std::string& p : line.parts) std::printf("    %s\n", p.c_str());
  }
  for (Scenario s : all) {
    for (const std::string& note : runs.at(s).report.notes) std::printf("note [%s] %s\n", to_string(s).c_str(), note.c_str());
  }
  std::fflush(stdout);
  return ok ? 0 : 1;
}
