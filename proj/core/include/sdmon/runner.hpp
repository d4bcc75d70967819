#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdmon/event_log.hpp"
#include "sdmon/scenario.hpp"

namespace sdmon {

struct TrajectorySample {
  double t = 0.0;
  std::string entity;  // "robot" or "ped<ID>"
  Point2 position;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  bool record_trajectories = true;
};

struct RunResult {
  Json report;
  EventLog log;
  std::vector<TrajectorySample> trajectory;
};

// Closed loop: sense, localize, monitor, plan, step. Deterministic for a
// fixed scenario and seed.
RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});
RunResult run_scenario_file(const std::string& path, std::span<const std::string> overrides = {},
                            const RunOptions& opts = {});

// Recomputes the run report from the event log alone.
Json summarize_log(std::span<const Event> events);

// Pretty JSON with a trailing newline.
std::string dump_report(const Json& report);

// Delimited text, header "t,entity,x,y".
void write_trajectories(std::span<const TrajectorySample> samples, std::ostream& os);
std::vector<TrajectorySample> read_trajectories(std::istream& is);

}  // namespace sdmon
