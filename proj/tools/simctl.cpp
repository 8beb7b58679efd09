#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "vanetsim/scenario.hpp"
#include "vanetsim/simulation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

int cmd_validate(const std::string& path) {
  auto scenario = vanetsim::sim::load_scenario(path);
  if (!scenario.ok()) {
    if (scenario.error().code == vanetsim::Errc::IoError) {
      std::cerr << "error: " << scenario.error().detail << "\n";
      return kExitIo;
    }
    std::cerr << "validation failed:\n" << scenario.error().detail;
    return kExitValidation;
  }
  const auto& sc = scenario.value();
  std::cout << "ok: " << sc.name << " (" << sc.nodes.size() << " nodes, "
            << sc.routes.size() << " routes, " << sc.vehicles.size() << " vehicles, "
            << sc.vrus.size() << " vrus)\n";
  return kExitOk;
}

int cmd_run(const std::string& path, const std::string& out_dir, long long seed_override,
            double duration_override) {
  auto scenario = vanetsim::sim::load_scenario(path);
  if (!scenario.ok()) {
    if (scenario.error().code == vanetsim::Errc::IoError) {
      std::cerr << "error: " << scenario.error().detail << "\n";
      return kExitIo;
    }
    std::cerr << "validation failed:\n" << scenario.error().detail;
    return kExitValidation;
  }
  auto sc = std::move(scenario.value());
  if (seed_override >= 0) sc.seed = static_cast<std::uint64_t>(seed_override);
  if (duration_override > 0) sc.duration_s = duration_override;

  const auto metrics = vanetsim::sim::run(sc);
  if (auto st = vanetsim::sim::emit_reports(metrics, out_dir); !st.ok()) {
    std::cerr << "error: " << st.error().detail << "\n";
    return kExitIo;
  }
  std::cout << "run complete: seed " << sc.seed << ", " << metrics.cams_sent
            << " CAMs sent, " << metrics.handover_events.size() << " handovers, reports in "
            << out_dir << "\n";
  return kExitOk;
}

// Aggregate a metrics directory into human-readable summary tables.
int cmd_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path throughput = fs::path(dir) / "throughput.csv";
  std::ifstream f(throughput);
  if (!f) {
    std::cerr << "error: cannot open " << throughput.string() << "\n";
    return kExitIo;
  }
  std::string line;
  std::getline(f, line);  // header
  std::map<std::string, std::vector<double>> per_rsu;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string t, obu, rsu, mbps, delivered;
    std::getline(ss, t, ',');
    std::getline(ss, obu, ',');
    std::getline(ss, rsu, ',');
    std::getline(ss, mbps, ',');
    std::getline(ss, delivered, ',');
    if (rsu == "0" || delivered != "1") continue;
    per_rsu["P" + rsu].push_back(std::stod(mbps));
  }
  std::cout << "rsu,samples,median_mbps,peak_mbps\n";
  for (auto& [rsu, samples] : per_rsu) {
    std::sort(samples.begin(), samples.end());
    const double median = samples.empty() ? 0.0 : samples[samples.size() / 2];
    const double peak = samples.empty() ? 0.0 : samples.back();
    std::cout << rsu << "," << samples.size() << "," << median << "," << peak << "\n";
  }

  const fs::path audit = fs::path(dir) / "pipeline_audit.csv";
  std::ifstream fa(audit);
  if (fa) {
    std::getline(fa, line);
    long long rows = 0, exactly_once = 0;
    while (std::getline(fa, line)) {
      ++rows;
      const auto comma = line.rfind(',');
      if (comma != std::string::npos && line.substr(comma + 1) == "1") ++exactly_once;
    }
    std::cout << "pipeline: " << exactly_once << "/" << rows
              << " datapoints delivered exactly once\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"city-scale vehicular network simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", metrics_dir;
  long long seed = -1;
  double duration = 0.0;

  auto* run = app.add_subcommand("run", "run a scenario and emit reports");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--duration", duration, "override duration (seconds)");

  auto* validate = app.add_subcommand("validate", "validate a scenario file");
  validate->add_option("scenario", scenario_path, "scenario file")->required();

  auto* report = app.add_subcommand("report", "summarize an emitted metrics directory");
  report->add_option("metrics", metrics_dir, "metrics directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(scenario_path, out_dir, seed, duration);
  if (validate->parsed()) return cmd_validate(scenario_path);
  if (report->parsed()) return cmd_report(metrics_dir);
  return kExitOk;
}
