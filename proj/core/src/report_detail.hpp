#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "sdmon/event_log.hpp"
#include "sdmon/monitor.hpp"

namespace sdmon::detail {

struct ErrorStats {
  int samples = 0;
  double sum = 0.0;
  double max = 0.0;

  void add(double e) {
    ++samples;
    sum += e;
    max = std::max(max, e);
  }
};

struct AttendEntry {
  int session = 0;
  AttendRecord record;
};

struct TrackingEntry {
  int ped = 0;
  double started_at = 0.0;
  double duration = 0.0;
  std::string outcome;
};

struct SweepRow {
  int trials = 0;
  int breaches_detected = 0;
  int enforcements = 0;
  bool has_enforcements = true;
};

// Everything the report is built from. Filled live by the runner and again
// from the event log by the replay path.
struct ReportStats {
  std::string experiment;
  std::string kind;
  std::uint64_t seed = 0;
  double duration = 0.0;
  bool sweep = false;

  int breaches_rgbd = 0;
  int breaches_cctv = 0;
  int alerts = 0;
  int resolved = 0;
  int lock_lost = 0;
  std::vector<AttendEntry> attend;
  std::vector<TrackingEntry> tracking;
  ErrorStats loc_rgbd;
  ErrorStats loc_cctv;

  double min_clearance = std::numeric_limits<double>::infinity();
  int pfz_triggered = 0;
  int pfz_violations = 0;
  std::string final_phase;
  double end_t = 0.0;  // logged, not reported
  std::map<std::string, SweepRow> sweep_rows;
};

Json build_report(const ReportStats& stats);

}  // namespace sdmon::detail
