#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sdmon/errors.hpp"
#include "sdmon/runner.hpp"
#include "sdmon/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kInputError = 2;

struct Outcome {
  int code = kOk;
  std::string message;
};

// Maps library exceptions onto exit codes with a one-line diagnostic.
template <typename F>
Outcome guarded(const std::string& label, F&& f) {
  try {
    f();
    return {};
  } catch (const sdmon::ParseError& e) {
    std::ostringstream os;
    os << label;
    if (e.line() > 0) os << ":" << e.line() << ":" << e.column();
    os << ": parse error: " << e.what();
    return {kInputError, os.str()};
  } catch (const sdmon::ValidationError& e) {
    return {kInputError, label + ": invalid [" + e.constraint() + "]: " + e.what()};
  } catch (const std::exception& e) {
    return {kRuntimeError, label + ": error: " + e.what()};
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string summary_line(const std::string& path, const sdmon::Json& r) {
  std::ostringstream os;
  os << path << ": breaches rgbd=" << r["breaches"]["rgbd"] << " cctv=" << r["breaches"]["cctv"]
     << " enforcements=" << r["enforcements"] << " final_phase=" << r["final_phase"].get<std::string>();
  if (r.contains("sweep")) {
    for (const auto& [name, row] : r["sweep"].items()) {
      os << " | " << name << ": " << row["breaches_detected"] << "/" << row["trials"];
      if (row.contains("enforcements")) os << " enforced " << row["enforcements"];
    }
  }
  for (const auto& t : r["tracking"])
    os << " | tracked ped " << t["ped"] << " " << t["duration_s"] << " s (" << t["outcome"].get<std::string>()
       << ")";
  return os.str();
}

int cmd_run(const std::vector<std::string>& scenarios, const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed, std::optional<double> duration, const std::string& out_dir,
            unsigned jobs) {
  sdmon::RunOptions opts;
  opts.seed = seed;
  opts.duration = duration;

  std::vector<Outcome> outcomes(scenarios.size());
  std::vector<std::string> lines(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      const std::string& path = scenarios[i];
      outcomes[i] = guarded(path, [&] {
        const auto result = sdmon::run_scenario_file(path, overrides, opts);
        fs::path dir = out_dir;
        if (scenarios.size() > 1) dir /= fs::path(path).stem();
        fs::create_directories(dir);
        write_file(dir / "events.ndjson", result.log.to_ndjson());
        write_file(dir / "report.json", sdmon::dump_report(result.report));
        std::ostringstream traj;
        sdmon::write_trajectories(result.trajectory, traj);
        write_file(dir / "trajectories.csv", traj.str());
        lines[i] = summary_line(path, result.report);
      });
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(scenarios.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  int code = kOk;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (outcomes[i].code != kOk) {
      std::cerr << outcomes[i].message << "\n";
      code = std::max(code, outcomes[i].code);
    } else {
      std::cout << lines[i] << "\n";
    }
  }
  return code;
}

int cmd_validate(const std::string& path, const std::vector<std::string>& overrides) {
  const auto o = guarded(path, [&] { sdmon::load_scenario(path, overrides); });
  if (o.code != kOk) {
    std::cerr << o.message << "\n";
    return o.code;
  }
  std::cout << path << ": ok\n";
  return kOk;
}

int cmd_replay(const std::string& log_path, const std::string& compare) {
  sdmon::Json report;
  const auto o = guarded(log_path, [&] {
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open " + log_path);
    report = sdmon::summarize_log(sdmon::EventLog::read(in));
  });
  if (o.code != kOk) {
    std::cerr << o.message << "\n";
    return o.code;
  }
  std::cout << sdmon::dump_report(report);
  if (compare.empty()) return kOk;
  std::ifstream in(compare);
  if (!in) {
    std::cerr << "cannot open " << compare << "\n";
    return kRuntimeError;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  if (ss.str() != sdmon::dump_report(report)) {
    std::cerr << "replayed report differs from " << compare << "\n";
    return kRuntimeError;
  }
  std::cerr << "replayed report matches " << compare << "\n";
  return kOk;
}

int cmd_coverage(const std::string& path, const std::vector<std::string>& overrides) {
  int code = kOk;
  const auto o = guarded(path, [&] {
    const auto sc = sdmon::load_scenario(path, overrides);
    const double spacing = sdmon::lane_spacing(sc);
    try {
      const auto plan = sdmon::scenario_lawnmower(sc);
      const auto rep = sdmon::check_coverage(plan, sc.rgbd.model.range);
      std::cout << path << ": lanes " << spacing << " m apart, " << plan.waypoints.size() << " waypoints, "
                << rep.covered << "/" << rep.cells << " cells covered, worst distance " << rep.worst_distance
                << " m\n";
    } catch (const sdmon::SpacingTooWide& e) {
      std::cout << path << ": coverage incomplete: " << e.what() << "\n";
      code = kRuntimeError;
    }
  });
  if (o.code != kOk) {
    std::cerr << o.message << "\n";
    return o.code;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social distancing monitor simulator"};
  app.require_subcommand(1);

  std::vector<std::string> scenarios;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string out_dir = "out";
  unsigned jobs = 1;
  auto* run = app.add_subcommand("run", "Run scenarios and write events.ndjson, report.json, trajectories.csv");
  run->add_option("scenario", scenarios, "Scenario files")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--duration", duration, "Override the run (or trial) duration in seconds");
  run->add_option("--out", out_dir, "Output directory (one subdirectory per scenario when batching)");
  run->add_option("--set", overrides, "Override a scenario value, path=value");
  run->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);

  std::string path;
  std::vector<std::string> validate_overrides;
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario");
  validate->add_option("scenario", path, "Scenario file")->required()->check(CLI::ExistingFile);
  validate->add_option("--set", validate_overrides, "Override a scenario value, path=value");

  std::string log_path, compare;
  auto* replay = app.add_subcommand("replay", "Recompute the report from an event log");
  replay->add_option("log", log_path, "events.ndjson")->required()->check(CLI::ExistingFile);
  replay->add_option("--compare", compare, "report.json to compare against");

  std::string cov_path;
  std::vector<std::string> cov_overrides;
  auto* coverage = app.add_subcommand("coverage", "Check lawnmower coverage of the CCTV blind spots");
  coverage->add_option("scenario", cov_path, "Scenario file")->required()->check(CLI::ExistingFile);
  coverage->add_option("--set", cov_overrides, "Override a scenario value, path=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  if (*run) return cmd_run(scenarios, overrides, seed, duration, out_dir, jobs);
  if (*validate) return cmd_validate(path, validate_overrides);
  if (*replay) return cmd_replay(log_path, compare);
  if (*coverage) return cmd_coverage(cov_path, cov_overrides);
  return kInputError;
}
