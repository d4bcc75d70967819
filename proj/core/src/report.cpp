#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "report_detail.hpp"
#include "sdmon/errors.hpp"
#include "sdmon/runner.hpp"

namespace sdmon {

namespace detail {

namespace {

Json opt_time(const std::optional<double>& t) { return t ? Json(round_to(*t, 3)) : Json(nullptr); }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json error_json(const ErrorStats& s) {
  Json j;
  j["samples"] = s.samples;
  j["mean_error_m"] = s.samples ? Json(round_to(s.sum / s.samples, 6)) : Json(nullptr);
  j["max_error_m"] = s.samples ? Json(round_to(s.max, 6)) : Json(nullptr);
  return j;
}

}  // namespace

Json build_report(const ReportStats& s) {
  Json r;
  r["experiment"] = s.experiment;
  r["kind"] = s.kind;
  r["seed"] = s.seed;
  r["duration_s"] = s.duration;
  r["breaches"] = {{"rgbd", s.breaches_rgbd}, {"cctv", s.breaches_cctv}};
  r["enforcements"] = s.alerts;
  r["groups_resolved"] = s.resolved;
  r["lock_lost"] = s.lock_lost;

  Json attend = Json::array();
  for (const auto& a : s.attend) {
    const auto& rec = a.record;
    Json j;
    j["session"] = a.session;
    j["group"] = rec.group;
    j["members"] = rec.members;
    j["selected_at"] = round_to(rec.selected_at, 3);
    j["alert_at"] = opt_time(rec.alert_at);
    j["resolved_at"] = opt_time(rec.resolved_at);
    j["lost_at"] = opt_time(rec.lost_at);
    j["attend_time_s"] = (rec.alert_at && rec.resolved_at)
                             ? Json(round_to(round_to(*rec.resolved_at, 3) - round_to(*rec.alert_at, 3), 3))
                             : Json(nullptr);
    attend.push_back(std::move(j));
  }
  r["attend"] = std::move(attend);

  Json tracking = Json::array();
  for (const auto& t : s.tracking)
    tracking.push_back(
        {{"ped", t.ped}, {"started_at", t.started_at}, {"duration_s", t.duration}, {"outcome", t.outcome}});
  r["tracking"] = std::move(tracking);

  r["localization"] = {{"rgbd", error_json(s.loc_rgbd)}, {"cctv", error_json(s.loc_cctv)}};
  r["min_clearance_m"] = finite_or_null(s.min_clearance);
  r["pfz_triggered"] = s.pfz_triggered;
  r["pfz_violations"] = s.pfz_violations;
  r["final_phase"] = s.final_phase;

  if (s.sweep) {
    Json sweep = Json::object();
    for (const auto& [name, row] : s.sweep_rows) {
      Json j;
      j["trials"] = row.trials;
      j["breaches_detected"] = row.breaches_detected;
      // CCTV alone cannot enforce, so the field is absent rather than zero.
      if (row.has_enforcements) j["enforcements"] = row.enforcements;
      sweep[name] = std::move(j);
    }
    r["sweep"] = std::move(sweep);
  }
  return r;
}

}  // namespace detail

namespace {

std::optional<double> null_or(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

Json summarize_log(std::span<const Event> events) {
  detail::ReportStats s;
  int session = 0;
  std::map<std::pair<int, int>, std::size_t> attend_index;
  std::optional<std::pair<int, double>> tracking_start;

  auto attend_of = [&](const Event& e) -> AttendRecord* {
    auto it = attend_index.find({session, e.data.at("group").get<int>()});
    return it == attend_index.end() ? nullptr : &s.attend[it->second].record;
  };

  for (const auto& e : events) {
    const Json& d = e.data;
    if (e.type == "RunStarted") {
      s.experiment = d.at("experiment").get<std::string>();
      s.kind = d.at("kind").get<std::string>();
      s.seed = d.at("seed").get<std::uint64_t>();
      s.duration = d.at("duration_s").get<double>();
    } else if (e.type == "TrialStarted") {
      s.sweep = true;
      ++session;
    } else if (e.type == "BreachConfirmed") {
      if (d.at("source") == "rgbd") {
        ++s.breaches_rgbd;
      } else {
        ++s.breaches_cctv;
      }
    } else if (e.type == "TargetSelected") {
      AttendRecord rec;
      rec.group = d.at("group").get<int>();
      rec.members = d.at("members").get<std::vector<int>>();
      rec.selected_at = e.t;
      attend_index[{session, rec.group}] = s.attend.size();
      s.attend.push_back({session, std::move(rec)});
    } else if (e.type == "AlertIssued") {
      ++s.alerts;
      if (auto* rec = attend_of(e)) rec->alert_at = e.t;
    } else if (e.type == "GroupResolved") {
      ++s.resolved;
      if (auto* rec = attend_of(e)) rec->resolved_at = e.t;
    } else if (e.type == "LockLost") {
      ++s.lock_lost;
      if (auto* rec = attend_of(e)) rec->lost_at = e.t;
    } else if (e.type == "TrackingStarted") {
      tracking_start = {d.at("ped").get<int>(), e.t};
    } else if (e.type == "TrackingLost" || e.type == "TrackingCompleted") {
      const int ped = d.at("ped").get<int>();
      const double started = tracking_start && tracking_start->first == ped ? tracking_start->second : 0.0;
      s.tracking.push_back({ped, started, d.at("duration_s").get<double>(), d.at("outcome").get<std::string>()});
    } else if (e.type == "LocalizationSample") {
      auto& acc = d.at("source") == "rgbd" ? s.loc_rgbd : s.loc_cctv;
      acc.add(d.at("error_m").get<double>());
    } else if (e.type == "TrialEnded") {
      const auto name = d.at("configuration").get<std::string>();
      auto& row = s.sweep_rows[name];
      row.has_enforcements = name != "cctv_only";
      ++row.trials;
      if (d.at("breach").get<bool>()) ++row.breaches_detected;
      if (d.at("alert").get<bool>()) ++row.enforcements;
    } else if (e.type == "RunEnded") {
      s.final_phase = d.at("final_phase").get<std::string>();
      s.min_clearance = null_or(d.at("min_clearance_m")).value_or(std::numeric_limits<double>::infinity());
      s.pfz_triggered = d.at("pfz_triggered").get<int>();
      s.pfz_violations = d.at("pfz_violations").get<int>();
    }
  }
  return detail::build_report(s);
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

void write_trajectories(std::span<const TrajectorySample> samples, std::ostream& os) {
  os << "t,entity,x,y\n";
  for (const auto& s : samples)
    os << fmt::format("{:.3f},{},{:.6f},{:.6f}\n", s.t, s.entity, s.position.x, s.position.y);
}

std::vector<TrajectorySample> read_trajectories(std::istream& is) {
  std::vector<TrajectorySample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "t,entity,x,y") throw ParseError("trajectory table: bad header '" + line + "'", 1, 1);
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t, entity, x, y;
    if (!std::getline(ss, t, ',') || !std::getline(ss, entity, ',') || !std::getline(ss, x, ',') ||
        !std::getline(ss, y))
      throw ParseError(fmt::format("trajectory table line {}: expected 4 columns", line_no), line_no, 1);
    try {
      out.push_back({std::stod(t), entity, {std::stod(x), std::stod(y)}});
    } catch (const std::exception&) {
      throw ParseError(fmt::format("trajectory table line {}: bad number", line_no), line_no, 1);
    }
  }
  return out;
}

}  // namespace sdmon
