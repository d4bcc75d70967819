#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sdmon/errors.hpp"
#include "sdmon/runner.hpp"

using namespace sdmon;

namespace {

std::string scenario_path(const std::string& name) { return std::string(SDMON_SCENARIO_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

int count_events(const EventLog& log, const std::string& type) {
  return static_cast<int>(std::count_if(log.events().begin(), log.events().end(),
                                        [&](const Event& e) { return e.type == type; }));
}

}  // namespace

TEST(Scenario, MalformedYamlReportsPosition) {
  const std::string text = "experiment: broken\nworld:\n  bounds_min: [0, 0\n";
  try {
    parse_scenario(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GE(e.line(), 3);
    EXPECT_GT(e.column(), 0);
  }
}

TEST(Scenario, UnknownKeyIsAParseErrorAtItsLine) {
  const std::string base = slurp(scenario_path("empty.scn"));
  const std::string text = base + "bogus_key: 1\n";
  try {
    parse_scenario(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), count_lines(base) + 1);
    EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
  }
  const std::vector<std::string> nested{"robot.no_such_key=1"};
  EXPECT_THROW(parse_scenario(base, nested), ParseError);
}

TEST(Scenario, ActiveRgbdNeedsAnExplicitRange) {
  std::string text = slurp(scenario_path("empty.scn"));
  const std::string line = "    range_m: 6\n";
  const auto at = text.find(line);
  ASSERT_NE(at, std::string::npos);
  text.erase(at, line.size());
  EXPECT_THROW(parse_scenario(text), ParseError);
  const std::vector<std::string> off{"cameras.rgbd.enabled=false"};
  EXPECT_NO_THROW(parse_scenario(text, off));
}

TEST(Scenario, DuplicatePedestrianIdFailsValidation) {
  try {
    load_scenario(scenario_path("invalid_duplicate_id.scn"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.constraint(), "pedestrian.id.unique");
  }
}

TEST(Scenario, BundledScenariosValidate) {
  for (const char* name : {"empty.scn", "crossing.scn", "fig8b.scn", "fig8c.scn", "table1_case1.scn",
                           "table1_case2.scn", "table1_case3.scn", "table2.scn"}) {
    EXPECT_NO_THROW(validate(load_scenario(scenario_path(name)))) << name;
  }
}

TEST(Scenario, OverridesReplaceValues) {
  const std::vector<std::string> ov{"robot.w_max_radps=0.25", "pedestrians[0].script[0].speed_mps=0.5",
                                    "seed=77"};
  const Scenario sc = load_scenario(scenario_path("table2.scn"), ov);
  EXPECT_DOUBLE_EQ(sc.world.robot.limits.w_max, 0.25);
  ASSERT_FALSE(sc.world.pedestrians.empty());
  ASSERT_FALSE(sc.world.pedestrians[0].script.empty());
  EXPECT_DOUBLE_EQ(sc.world.pedestrians[0].script[0].speed_mps, 0.5);
  EXPECT_EQ(sc.seed, 77u);
  const std::vector<std::string> bad{"robot.w_max_radps"};
  try {
    load_scenario(scenario_path("table2.scn"), bad);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.constraint(), "override.syntax");
  }
  // A section missing from the file is created by the override.
  const std::vector<std::string> fresh{"planner.lane_spacing_m=3"};
  const Scenario c3 = load_scenario(scenario_path("table1_case3.scn"), fresh);
  EXPECT_EQ(c3.planner.lane_spacing, 3.0);
  EXPECT_EQ(lane_spacing(c3), 3.0);
  const std::vector<std::string> out_of_range{"pedestrians[9].radius_m=0.2"};
  EXPECT_THROW(load_scenario(scenario_path("table2.scn"), out_of_range), ValidationError);
}

TEST(Runner, EmptyWorldStaysOnPatrol) {
  RunOptions opts;
  opts.duration = 20.0;
  const RunResult r = run_scenario_file(scenario_path("empty.scn"), {}, opts);
  EXPECT_EQ(r.report["breaches"]["rgbd"], 0);
  EXPECT_EQ(r.report["breaches"]["cctv"], 0);
  EXPECT_EQ(r.report["enforcements"], 0);
  EXPECT_EQ(r.report["final_phase"], "Lawnmower");
  EXPECT_EQ(count_events(r.log, "BreachConfirmed"), 0);
  EXPECT_EQ(count_events(r.log, "RunEnded"), 1);
  // The robot actually moves along the lanes.
  double travelled = 0.0;
  Point2 last{};
  bool first = true;
  for (const auto& s : r.trajectory) {
    if (s.entity != "robot") continue;
    if (!first) travelled += distance(last, s.position);
    last = s.position;
    first = false;
  }
  EXPECT_GT(travelled, 5.0);
}

TEST(Runner, SameSeedGivesIdenticalLogs) {
  RunOptions opts;
  opts.duration = 20.0;
  const auto a = run_scenario_file(scenario_path("fig8c.scn"), {}, opts);
  const auto b = run_scenario_file(scenario_path("fig8c.scn"), {}, opts);
  EXPECT_EQ(a.log.to_ndjson(), b.log.to_ndjson());
  EXPECT_EQ(dump_report(a.report), dump_report(b.report));
}

TEST(Runner, ReplayReproducesTheReport) {
  for (const char* name : {"fig8c.scn", "crossing.scn"}) {
    const auto r = run_scenario_file(scenario_path(name));
    std::istringstream in(r.log.to_ndjson());
    const auto events = EventLog::read(in);
    EXPECT_EQ(events.size(), r.log.size());
    EXPECT_EQ(dump_report(summarize_log(events)), dump_report(r.report)) << name;
  }
}

TEST(Runner, EventLogRoundTrip) {
  EventLog log;
  log.emit(1.23456, "BreachConfirmed", {{"id_a", 1}, {"id_b", 2}, {"source", "cctv"}});
  log.emit(2.0, "PhaseChanged", {{"from", "Idle"}, {"to", "Approach"}});
  std::istringstream in(log.to_ndjson());
  const auto back = EventLog::read(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_DOUBLE_EQ(back[0].t, 1.235);
  EXPECT_EQ(back[0].type, "BreachConfirmed");
  EXPECT_EQ(back[0].data["source"], "cctv");
  EXPECT_EQ(back[1].data["to"], "Approach");
  std::istringstream junk("{\"t\": 1.0, \"type\": \"X\"}\nnot json\n");
  EXPECT_THROW(EventLog::read(junk), ParseError);
}

TEST(Runner, TrajectoryRoundTrip) {
  std::vector<TrajectorySample> samples;
  for (int k = 0; k < 10; ++k) {
    samples.push_back({0.1 * k, "robot", {0.5 * k, 1.0}});
    samples.push_back({0.1 * k, "ped3", {2.0, -0.25 * k}});
  }
  std::stringstream ss;
  write_trajectories(samples, ss);
  const std::string text = ss.str();
  EXPECT_EQ(count_lines(text), 21);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,entity,x,y");
  const auto back = read_trajectories(ss);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(back[i].entity, samples[i].entity);
    EXPECT_NEAR(back[i].t, samples[i].t, 1e-9);
    EXPECT_NEAR(back[i].position.x, samples[i].position.x, 1e-6);
    EXPECT_NEAR(back[i].position.y, samples[i].position.y, 1e-6);
  }
}

TEST(Runner, RecordingCanBeSwitchedOff) {
  RunOptions opts;
  opts.duration = 2.0;
  opts.record_trajectories = false;
  EXPECT_TRUE(run_scenario_file(scenario_path("empty.scn"), {}, opts).trajectory.empty());
  opts.record_trajectories = true;
  const auto r = run_scenario_file(scenario_path("empty.scn"), {}, opts);
  EXPECT_FALSE(r.trajectory.empty());
  EXPECT_EQ(r.trajectory.front().entity, "robot");
}
