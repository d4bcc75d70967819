#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "sdmon/errors.hpp"
#include "sdmon/monitor.hpp"
#include "sdmon/simworld.hpp"

using namespace sdmon;

namespace {

using Pairs = std::vector<std::pair<int, int>>;

// Plain union-find with path halving, written independently of the library.
struct Dsu {
  std::map<int, int> parent;
  int find(int x) {
    if (!parent.count(x)) parent[x] = x;
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::set<std::set<int>> oracle_partition(const Pairs& pairs) {
  Dsu d;
  for (const auto& [a, b] : pairs) d.unite(a, b);
  std::map<int, std::set<int>> comp;
  for (const auto& [a, b] : pairs) {
    comp[d.find(a)].insert(a);
    comp[d.find(b)].insert(b);
  }
  std::set<std::set<int>> out;
  for (auto& [root, s] : comp) out.insert(s);
  return out;
}

std::set<std::set<int>> as_sets(const std::vector<Group>& groups) {
  std::set<std::set<int>> out;
  for (const auto& g : groups) out.insert({g.member_ids.begin(), g.member_ids.end()});
  return out;
}

Pairs random_pairs(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ids(1, 50), count(0, 60);
  Pairs out;
  const int n = count(rng);
  while (static_cast<int>(out.size()) < n) {
    const int a = ids(rng), b = ids(rng);
    if (a != b) out.push_back({a, b});
  }
  return out;
}

std::vector<PairDistance> one_pair(double d, double t, Source s = Source::Cctv) {
  return {{1, 2, d, t, s}};
}

LocalizedPedestrian at(int id, Point2 p, double t) { return {id, p, FrameTag::Map, Source::Cctv, t}; }

// CCTV-style observation of map-frame points; boxes are laid out so that
// pedestrian columns follow the map x coordinate.
CameraObservation cctv_obs(const std::vector<std::pair<int, Point2>>& peds, double t) {
  CameraObservation obs;
  obs.image_width = 1920;
  for (const auto& [id, p] : peds) {
    obs.located.push_back(at(id, p, t));
    obs.boxes.push_back({{900 + 40 * p.x, 400}, 30, 90, id});
  }
  return obs;
}

}  // namespace

TEST(Grouping, WorkedExample) {
  const Pairs pairs{{1, 2}, {1, 3}, {2, 3}, {4, 5}};
  const auto groups = classify_groups(pairs);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].member_ids, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(groups[1].member_ids, (std::vector<int>{4, 5}));
  EXPECT_EQ(classify_groups(pairs, GroupingMode::Literal), groups);
}

TEST(Grouping, LiteralSinglePassDoesNotBridgeGroups) {
  // The bridging pair joins both earlier groups, which then overlap.
  const Pairs pairs{{1, 2}, {3, 4}, {2, 3}};
  const auto literal = classify_groups(pairs, GroupingMode::Literal);
  ASSERT_EQ(literal.size(), 2u);
  EXPECT_EQ(literal[0].member_ids, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(literal[1].member_ids, (std::vector<int>{2, 3, 4}));
  const auto cc = classify_groups(pairs);
  ASSERT_EQ(cc.size(), 1u);
  EXPECT_EQ(cc[0].member_ids, (std::vector<int>{1, 2, 3, 4}));
}

TEST(Grouping, UnionFindPropertySuite) {
  std::mt19937_64 rng(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    Pairs pairs = random_pairs(rng);
    const auto groups = classify_groups(pairs);

    EXPECT_EQ(as_sets(groups), oracle_partition(pairs)) << "trial " << trial;

    // Partition: disjoint, covers exactly the IDs that appear.
    std::set<int> seen, ids;
    for (const auto& [a, b] : pairs) ids.insert({a, b});
    for (const auto& g : groups) {
      EXPECT_TRUE(std::is_sorted(g.member_ids.begin(), g.member_ids.end()));
      for (int id : g.member_ids) EXPECT_TRUE(seen.insert(id).second) << "id " << id << " in two groups";
    }
    EXPECT_EQ(seen, ids);

    // Ordering: size descending, ties by smallest member.
    for (std::size_t i = 1; i < groups.size(); ++i) {
      const auto& p = groups[i - 1];
      const auto& q = groups[i];
      EXPECT_TRUE(p.size() > q.size() || (p.size() == q.size() && p.member_ids[0] < q.member_ids[0]));
    }

    // Permutation invariance: order of pairs and order within pairs.
    Pairs shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& pr : shuffled)
      if (rng() & 1) std::swap(pr.first, pr.second);
    EXPECT_EQ(classify_groups(shuffled), groups) << "trial " << trial;
  }
}

TEST(Grouping, SelfPairThrows) {
  const Pairs pairs{{1, 2}, {3, 3}};
  EXPECT_THROW(classify_groups(pairs), SelfPair);
  EXPECT_THROW(make_pair_key(4, 4), SelfPair);
  EXPECT_EQ(make_pair_key(5, 2), std::make_pair(2, 5));
}

TEST(Grouping, MergeAcrossCameras) {
  const std::vector<Group> a{{{1, 2}}, {{7, 8}}};
  const std::vector<Group> b{{{2, 3}}, {{10, 11}}};
  const auto m = merge_groups(a, b);
  EXPECT_EQ(as_sets(m), (std::set<std::set<int>>{{1, 2, 3}, {7, 8}, {10, 11}}));
  EXPECT_EQ(m[0].member_ids, (std::vector<int>{1, 2, 3}));
}

TEST(BreachTimer, FourPointNineSecondsIsNotABreach) {
  PairTimers timers(Source::Rgbd);
  const MonitorConfig cfg;
  std::vector<BreachEvent> events;
  for (int k = 0; k <= 49; ++k) {
    auto e = timers.update(one_pair(1.0, 0.1 * k, Source::Rgbd), 0.1 * k, cfg);
    events.insert(events.end(), e.begin(), e.end());
  }
  // Compliant again: the timer resets without an event.
  auto e = timers.update(one_pair(2.5, 5.0, Source::Rgbd), 5.0, cfg);
  events.insert(events.end(), e.begin(), e.end());
  EXPECT_TRUE(events.empty());
  EXPECT_TRUE(timers.timers().empty() || !timers.timers().begin()->second.below_since);
}

TEST(BreachTimer, FivePointOneSecondsIsExactlyOneBreach) {
  PairTimers timers(Source::Rgbd);
  const MonitorConfig cfg;
  std::vector<BreachEvent> events;
  for (int k = 0; k <= 51; ++k) {
    auto e = update_pair_timers(timers, one_pair(1.0, 0.1 * k, Source::Rgbd), 0.1 * k, cfg);
    events.insert(events.end(), e.begin(), e.end());
  }
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].pair, std::make_pair(1, 2));
  EXPECT_NEAR(events[0].t_start, 0.0, 1e-9);
  EXPECT_NEAR(events[0].t_confirmed, 5.0, 0.1);
  EXPECT_EQ(events[0].source, Source::Rgbd);
  EXPECT_FALSE(timers.any_running());
}

TEST(BreachTimer, DropoutResetsUnlessHeld) {
  MonitorConfig cfg;
  auto run = [&](bool hold) {
    cfg.hold_timer_on_dropout = hold;
    PairTimers timers(Source::Cctv);
    int events = 0;
    for (int k = 0; k <= 60; ++k) {
      const double t = 0.1 * k;
      // The pair is unobserved between 2.0 s and 2.5 s.
      const auto d = (t >= 2.0 && t < 2.5) ? std::vector<PairDistance>{} : one_pair(1.0, t);
      events += static_cast<int>(timers.update(d, t, cfg).size());
    }
    return events;
  };
  EXPECT_EQ(run(false), 0);
  EXPECT_EQ(run(true), 1);
}

TEST(BreachTimer, TimeMustNotRegress) {
  PairTimers timers;
  const MonitorConfig cfg;
  timers.update(one_pair(1.0, 1.0), 1.0, cfg);
  EXPECT_THROW(timers.update(one_pair(1.0, 0.9), 0.9, cfg), TimeRegression);
}

TEST(BreachTimer, CrossingPedestriansMatchClosedForm) {
  // Opposite walkers at 1 m/s on lines 0.5 m apart close at 2 m/s; they are
  // under the threshold while |2 (t - t0)| < sqrt(th^2 - 0.5^2).
  const double th = kSixFeet, offset = 0.5, v = 1.0;
  const double window = std::sqrt(th * th - offset * offset) / v;
  EXPECT_NEAR(window, 1.76, 0.005);

  WorldState w;
  w.dt = 0.1;
  w.bounds_min = {-20, -20};
  w.bounds_max = {20, 20};
  w.robot.pose = Frame2(0, {0, -10});
  Pedestrian a, b;
  a.id = 1;
  a.position = {-6, 0.25};
  a.script = {{{6, 0.25}, v, 0.0}};
  b.id = 2;
  b.position = {6, -0.25};
  b.script = {{{-6, -0.25}, v, 0.0}};
  w.pedestrians = {a, b};

  PairTimers timers(Source::Cctv);
  const MonitorConfig cfg;
  int below = 0, events = 0;
  for (int k = 0; k <= 120; ++k) {
    const double t = w.time();
    const double d = distance(w.pedestrians[0].position, w.pedestrians[1].position);
    if (d < th) ++below;
    events += static_cast<int>(timers.update(one_pair(d, t), t, cfg).size());
    step_in_place(w, {});
  }
  EXPECT_EQ(events, 0);
  EXPECT_NEAR(below * w.dt, window, w.dt);
}

TEST(LockSelection, NearestToImageCenterWithHysteresis) {
  const std::vector<int> members{1, 2, 3};
  const std::vector<BoundingBox> boxes{{{100, 0}, 20, 40, 1}, {{300, 0}, 20, 40, 2}, {{360, 0}, 20, 40, 3}};
  // Centroids 110, 310, 370 in a 640-wide image: 2 is 10 px off, 3 is 50 px off.
  EXPECT_EQ(select_locked(members, boxes, 640, std::nullopt, 0.1), 2);
  // Previous lock 3 is only 40 px worse, under 64 px of hysteresis.
  EXPECT_EQ(select_locked(members, boxes, 640, 3, 0.1), 3);
  // Lock 1 is 200 px off: switch.
  EXPECT_EQ(select_locked(members, boxes, 640, 1, 0.1), 2);
  // Ties go to the smaller ID.
  const std::vector<BoundingBox> tie{{{300, 0}, 20, 40, 9}, {{320, 0}, 20, 40, 4}};
  EXPECT_EQ(select_locked(std::vector<int>{4, 9}, tie, 660, std::nullopt, 0.0), 4);
  EXPECT_THROW(select_locked(std::vector<int>{7}, boxes, 640, std::nullopt, 0.1), NoVisibleMember);
}

TEST(Goals, RgbdIsRobotFrameAndCctvIsRotatedIntoIt) {
  const LocalizedPedestrian r{1, {2.0, 0.5}, FrameTag::Robot, Source::Rgbd, 0.0};
  const Point2 g = goal_from_rgbd(r);
  EXPECT_DOUBLE_EQ(g.x, 2.0);
  EXPECT_DOUBLE_EQ(g.y, 0.5);

  CctvCameraModel cam;
  cam.gnd_to_map = Frame2(0.0, {10.0, 0.0});
  const LocalizedPedestrian c{1, {1.0, 3.0}, FrameTag::Ground, Source::Cctv, 0.0};
  // Robot at (11, 0) facing +y: the pedestrian at map (11, 3) is straight ahead.
  const Point2 gc = goal_from_cctv(c, cam, Frame2(kPi / 2, {11.0, 0.0}));
  EXPECT_NEAR(gc.x, 3.0, 1e-12);
  EXPECT_NEAR(gc.y, 0.0, 1e-12);
}

TEST(MonitorLoop, BreachTargetAlertResolve) {
  MonitorConfig cfg;
  Monitor m(cfg, Phase::Idle);
  EventLog log;
  const Frame2 robot(0.0, {0.0, 0.0});
  double t = 0.0;
  auto tick = [&](std::vector<std::pair<int, Point2>> peds, Frame2 pose) {
    MonitorInput in;
    in.t = t;
    in.robot_pose = pose;
    in.cctv = cctv_obs(peds, t);
    m.update(in, log);
    t = round_to(t + 0.1, 9);
  };
  // Pedestrians 1 and 2 one meter apart, 3 far away.
  while (t < 5.05) tick({{1, {4, 0}}, {2, {5, 0}}, {3, {9, 5}}}, robot);
  EXPECT_EQ(m.counters().breaches_cctv, 1);
  EXPECT_EQ(m.state().phase, Phase::Navigating);
  ASSERT_TRUE(m.state().target_group);
  EXPECT_EQ(m.state().target_members, (std::vector<int>{1, 2}));
  EXPECT_EQ(m.state().goal_source, Source::Cctv);
  EXPECT_TRUE(m.state().goal_fresh);

  // The robot reaches stand-off: alert.
  const Frame2 close(0.0, {2.5, 0.0});
  tick({{1, {4, 0}}, {2, {5, 0}}, {3, {9, 5}}}, close);
  EXPECT_EQ(m.state().phase, Phase::Attending);
  EXPECT_EQ(m.counters().alerts, 1);

  // They separate and stay apart for the compliance duration.
  while (t < 9.0) tick({{1, {4, 0}}, {2, {7, 0}}, {3, {9, 5}}}, close);
  EXPECT_EQ(m.counters().resolved, 1);
  EXPECT_EQ(m.state().phase, Phase::Idle);
  EXPECT_FALSE(m.state().target_group);

  std::vector<std::string> types;
  for (const auto& e : log.events())
    if (e.type != "GroupFormed") types.push_back(e.type);
  const std::vector<std::string> want{"BreachConfirmed", "TargetSelected", "LockChanged", "GoalSourceChanged",
                                      "PhaseChanged",    "PhaseChanged",   "AlertIssued", "GroupResolved",
                                      "PhaseChanged"};
  EXPECT_EQ(types, want);
  const auto& rec = m.attend_records().at(0);
  EXPECT_NEAR(rec.selected_at, 5.0, 1e-9);
  ASSERT_TRUE(rec.alert_at && rec.resolved_at);
  EXPECT_NEAR(*rec.resolved_at - *rec.alert_at, 3.0 + 0.1, 0.1 + 1e-9);
}

TEST(MonitorLoop, LockLostAfterTimeout) {
  MonitorConfig cfg;
  Monitor m(cfg, Phase::Lawnmower);
  EventLog log;
  double t = 0.0;
  for (; t < 5.05; t = round_to(t + 0.1, 9)) {
    MonitorInput in;
    in.t = t;
    in.cctv = cctv_obs({{1, {4, 0}}, {2, {5, 0}}}, t);
    m.update(in, log);
  }
  ASSERT_TRUE(m.state().target_group);
  double lost_at = -1.0;
  for (; t < 8.0; t = round_to(t + 0.1, 9)) {
    MonitorInput in;
    in.t = t;
    in.cctv = cctv_obs({}, t);
    m.update(in, log);
    if (lost_at < 0 && m.counters().lock_lost == 1) lost_at = t;
  }
  EXPECT_EQ(m.counters().lock_lost, 1);
  // Last seen at 5.0; lost once more than one second has passed.
  EXPECT_NEAR(lost_at, 6.1, 1e-9);
  EXPECT_EQ(m.state().phase, Phase::Lawnmower);
}
