#include "sdmon/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sdmon/errors.hpp"
#include "sdmon/monitor.hpp"
#include "sdmon/navigation.hpp"
#include "sdmon/perception.hpp"
#include "sdmon/sensors.hpp"
#include "report_detail.hpp"

namespace sdmon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SessionSetup {
  bool use_rgbd = true;
  bool use_cctv = false;
  bool robot_active = true;
  double duration = 0.0;
  bool stop_on_alert = false;
  bool stop_on_breach = false;
};

struct SessionOutcome {
  bool breach = false;
  bool alert = false;
  double min_clearance = kInf;
  double end_t = 0.0;
};

struct Sensed {
  std::optional<CameraObservation> rgbd;
  std::optional<CameraObservation> cctv;
  std::vector<TrackedPedestrian> tracked;
};

Json point_json(const Point2& p) { return Json::array({round_to(p.x, 6), round_to(p.y, 6)}); }

class Runner {
 public:
  Runner(const Scenario& sc, std::uint64_t seed, const RunOptions& opts, EventLog& log, detail::ReportStats& stats,
         std::vector<TrajectorySample>& traj)
      : sc_(sc), seed_(seed), opts_(opts), log_(log), stats_(stats), traj_(traj) {}

  SessionOutcome run_monitor(WorldState world, const SessionSetup& setup, std::uint64_t session_seed,
                             int session) {
    std::mt19937_64 rng(session_seed);
    TrackIdAssigner rgbd_ids(sc_.rgbd.reassign_id_on_reentry);
    TrackIdAssigner cctv_ids(sc_.cctv.reassign_id_on_reentry);
    VelocityEstimator velocities;
    BaselinePlanner planner(sc_.planner);

    const Phase patrol = (setup.robot_active && sc_.patrol == Patrol::Lawnmower) ? Phase::Lawnmower : Phase::Idle;
    Monitor monitor(sc_.monitor, patrol, setup.use_cctv ? &sc_.cctv.model : nullptr);
    std::optional<LawnmowerFollower> mower;
    if (patrol == Phase::Lawnmower) mower.emplace(scenario_lawnmower(sc_), world.robot.pose.translation());
    TrailFollower trail;
    std::optional<int> trail_group;

    SessionOutcome out;
    out.min_clearance = robot_clearance(world);
    const auto steps_per_sample = std::max<std::int64_t>(1, std::llround(1.0 / world.dt));
    while (true) {
      const double t = world.time();
      const bool sample = world.step_count % steps_per_sample == 0;
      Sensed s = sense(world, t, setup.use_rgbd, setup.use_cctv, rng, rgbd_ids, cctv_ids, velocities, sample);
      const LidarScan lidar = sense_lidar(world, world.robot, sc_.lidar);

      const std::size_t breaches_before = monitor.breaches().size();
      const PursuitState& st = monitor.update({t, world.robot.pose, s.rgbd, s.cctv}, log_);
      if (monitor.breaches().size() > breaches_before) out.breach = true;
      if (monitor.counters().alerts > 0) out.alert = true;

      VelocityCommand cmd;
      if (setup.robot_active) {
        const PlannerInput in{{}, lidar, {world.robot.linear_vel, world.robot.angular_vel}};
        const FreezingZone pfz = build_pfz(s.tracked, world.robot, sc_.planner.horizon, sc_.planner.min_pfz_speed);
        std::optional<PlanResult> res;
        switch (st.phase) {
          case Phase::Navigating:
          case Phase::Attending: {
            if (!st.goal) break;
            if (trail_group != st.target_group) {
              trail.reset();
              trail_group = st.target_group;
            }
            Point2 nav = *st.goal;
            if (st.goal_source == Source::Cctv && !st.trail.empty()) {
              const Point2 crumb =
                  trail.target(st.trail, world.robot.pose.translation(), sc_.planner.trail_lookahead);
              nav = world.robot.pose.inverse().apply(crumb);
            }
            res = pursue(st, nav, in, pfz, world.robot, sc_.rgbd.model.fov, sc_.monitor.standoff, planner,
                         sc_.planner);
            break;
          }
          case Phase::Lawnmower: {
            if (monitor.rgbd_timers().any_running()) break;
            const auto wp = mower->target(world.robot.pose.translation(), sc_.planner.waypoint_tolerance);
            if (!wp) break;
            PlannerInput wp_in = in;
            wp_in.goal = world.robot.pose.inverse().apply(*wp);
            res = planner.plan(wp_in, pfz, world.robot);
            break;
          }
          case Phase::Idle:
            break;
        }
        if (res) {
          cmd = res->cmd;
          if (res->pfz_triggered) {
            ++stats_.pfz_triggered;
            if (heading_hits_zone(res->heading, pfz.hull, world.robot.radius)) ++stats_.pfz_violations;
          }
        }
      }

      record(world, session);
      if ((setup.stop_on_alert && out.alert) || (setup.stop_on_breach && out.breach) ||
          t + kTimeEpsilon >= setup.duration) {
        stats_.final_phase = std::string(to_string(st.phase));
        out.end_t = t;
        stats_.end_t = std::max(stats_.end_t, t);
        break;
      }
      step_in_place(world, cmd);
      out.min_clearance = std::min(out.min_clearance, robot_clearance(world));
    }
    for (const auto& r : monitor.attend_records()) stats_.attend.push_back({session, r});
    const auto& c = monitor.counters();
    stats_.breaches_rgbd += c.breaches_rgbd;
    stats_.breaches_cctv += c.breaches_cctv;
    stats_.alerts += c.alerts;
    stats_.resolved += c.resolved;
    stats_.lock_lost += c.lock_lost;
    stats_.min_clearance = std::min(stats_.min_clearance, out.min_clearance);
    return out;
  }

  void run_tracking(WorldState world, double duration) {
    std::mt19937_64 rng(seed_);
    TrackIdAssigner ids(sc_.rgbd.reassign_id_on_reentry);
    VelocityEstimator velocities;
    BaselinePlanner planner(sc_.planner);
    const int target = *sc_.tracking_target;
    const auto steps_per_sample = std::max<std::int64_t>(1, std::llround(1.0 / world.dt));

    double min_clearance = robot_clearance(world);
    log_.emit(world.time(), "TrackingStarted", {{"ped", target}});
    const double t0 = world.time();
    while (true) {
      const double t = world.time();
      const bool sample = world.step_count % steps_per_sample == 0;
      Sensed s = sense(world, t, true, false, rng, ids, ids, velocities, sample);
      const LidarScan lidar = sense_lidar(world, world.robot, sc_.lidar);

      const Pedestrian* ped = world.find_pedestrian(target);
      const LocalizedPedestrian* lock = nullptr;
      for (const auto& lp : s.rgbd->located)
        if (ids.ground_truth(lp.ped_id) == target) lock = &lp;

      std::optional<std::string> outcome;
      if (ped && ped->finished()) {
        outcome = "completed";
      } else if (!lock) {
        outcome = "lost";
      } else if (t + kTimeEpsilon >= duration) {
        outcome = "timeout";
      }
      if (outcome) {
        const double tracked = round_to(round_to(t, 3) - round_to(t0, 3), 3);
        log_.emit(t, *outcome == "lost" ? "TrackingLost" : "TrackingCompleted",
                  {{"ped", target}, {"duration_s", tracked}, {"outcome", *outcome}});
        stats_.tracking.push_back({target, round_to(t0, 3), tracked, *outcome});
        record(world, 0);
        stats_.end_t = t;
        break;
      }

      PursuitState st;
      st.goal = lock->position;
      st.goal_source = Source::Rgbd;
      st.phase = Phase::Navigating;
      const PlannerInput in{*st.goal, lidar, {world.robot.linear_vel, world.robot.angular_vel}};
      const FreezingZone pfz = build_pfz(s.tracked, world.robot, sc_.planner.horizon, sc_.planner.min_pfz_speed);
      const PlanResult res = pursue(st, *st.goal, in, pfz, world.robot, sc_.rgbd.model.fov, sc_.monitor.standoff,
                                    planner, sc_.planner);
      if (res.pfz_triggered) {
        ++stats_.pfz_triggered;
        if (heading_hits_zone(res.heading, pfz.hull, world.robot.radius)) ++stats_.pfz_violations;
      }
      record(world, 0);
      step_in_place(world, res.cmd);
      min_clearance = std::min(min_clearance, robot_clearance(world));
    }
    stats_.final_phase = std::string(to_string(Phase::Navigating));
    stats_.min_clearance = std::min(stats_.min_clearance, min_clearance);
  }

 private:
  Sensed sense(const WorldState& world, double t, bool use_rgbd, bool use_cctv, std::mt19937_64& rng,
               TrackIdAssigner& rgbd_ids, TrackIdAssigner& cctv_ids, VelocityEstimator& velocities, bool sample) {
    Sensed s;
    const Frame2& pose = world.robot.pose;
    if (use_rgbd) {
      const auto& cam = sc_.rgbd.model;
      RgbdFrame frame = sense_rgbd(world, cam, rng);
      rgbd_ids.assign(frame.boxes);
      CameraObservation obs;
      obs.image_width = cam.width;
      for (const auto& box : frame.boxes) {
        LocalizedPedestrian lp;
        try {
          lp = localize_rgbd(box, frame.depth, cam, t);
        } catch (const InsufficientDepth&) {
          continue;
        }
        lp.position = cam.mount.apply(lp.position);
        obs.boxes.push_back(box);
        obs.located.push_back(lp);
        const Point2 map = pose.apply(lp.position);
        velocities.observe(lp.ped_id, map, t);
        if (sample) log_sample(t, Source::Rgbd, rgbd_ids.ground_truth(lp.ped_id), map, world);
      }
      velocities.prune(t);
      for (const auto& lp : obs.located) {
        const Vec2 v = velocities.velocity(lp.ped_id).value_or(Vec2{});
        s.tracked.push_back({lp.ped_id, lp.position, rotate(v, -pose.rotation())});
      }
      s.rgbd = std::move(obs);
    }
    if (use_cctv) {
      const auto& cam = sc_.cctv.model;
      auto boxes = sense_cctv(world, cam);
      cctv_ids.assign(boxes);
      CameraObservation obs;
      obs.image_width = cam.width;
      for (const auto& box : boxes) {
        LocalizedPedestrian lp = localize_cctv(box, cam, true, t);
        obs.boxes.push_back(box);
        obs.located.push_back(lp);
        if (sample) log_sample(t, Source::Cctv, cctv_ids.ground_truth(lp.ped_id), lp.position, world);
      }
      s.cctv = std::move(obs);
    }
    return s;
  }

  void log_sample(double t, Source source, int truth_id, const Point2& est_map, const WorldState& world) {
    const Pedestrian* p = world.find_pedestrian(truth_id);
    if (!p) return;
    const double err = round_to(distance(est_map, p->position), 6);
    log_.emit(t, "LocalizationSample",
              {{"source", to_string(source)},
               {"ped", truth_id},
               {"est", point_json(est_map)},
               {"truth", point_json(p->position)},
               {"error_m", err}});
    auto& acc = source == Source::Rgbd ? stats_.loc_rgbd : stats_.loc_cctv;
    acc.add(err);
  }

  void record(const WorldState& world, int session) {
    if (!opts_.record_trajectories || session != 0) return;
    const double t = round_to(world.time(), 3);
    traj_.push_back({t, "robot", world.robot.pose.translation()});
    for (const auto& p : world.pedestrians) traj_.push_back({t, "ped" + std::to_string(p.id), p.position});
  }

  const Scenario& sc_;
  std::uint64_t seed_;
  const RunOptions& opts_;
  EventLog& log_;
  detail::ReportStats& stats_;
  std::vector<TrajectorySample>& traj_;
};

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& opts) {
  Scenario sc = scenario;
  if (opts.seed) sc.seed = *opts.seed;
  if (opts.duration) {
    sc.duration = *opts.duration;
    if (sc.sweep) sc.sweep->trial_duration = *opts.duration;
  }
  validate(sc);

  RunResult result;
  detail::ReportStats stats;
  stats.experiment = sc.experiment;
  stats.kind = std::string(to_string(sc.kind));
  stats.seed = sc.seed;
  stats.duration = round_to(sc.duration, 3);
  stats.sweep = sc.sweep.has_value();

  EventLog& log = result.log;
  log.emit(0.0, "RunStarted",
           {{"experiment", sc.experiment},
            {"kind", to_string(sc.kind)},
            {"seed", sc.seed},
            {"duration_s", stats.duration},
            {"dt_s", round_to(sc.world.dt, 6)},
            {"patrol", to_string(sc.patrol)}});

  Runner runner(sc, sc.seed, opts, log, stats, result.trajectory);
  if (sc.kind == ExperimentKind::Tracking) {
    runner.run_tracking(sc.world, sc.duration);
  } else if (!sc.sweep) {
    SessionSetup setup;
    setup.use_rgbd = sc.rgbd.enabled;
    setup.use_cctv = sc.cctv.enabled;
    setup.duration = sc.duration;
    runner.run_monitor(sc.world, setup, sc.seed, 0);
  } else {
    int session = 0;
    for (const auto config : sc.sweep->configurations) {
      auto& row = stats.sweep_rows[std::string(to_string(config))];
      row.has_enforcements = config != Configuration::CctvOnly;
      for (std::size_t i = 0; i < sc.sweep->trials.size(); ++i) {
        WorldState world = sc.world;
        world.pedestrians.insert(world.pedestrians.end(), sc.sweep->trials[i].begin(), sc.sweep->trials[i].end());
        SessionSetup setup;
        setup.use_rgbd = config != Configuration::CctvOnly && sc.rgbd.enabled;
        setup.use_cctv = config != Configuration::RobotOnly;
        setup.robot_active = config != Configuration::CctvOnly;
        setup.duration = sc.sweep->trial_duration;
        setup.stop_on_alert = true;
        setup.stop_on_breach = config == Configuration::CctvOnly;

        // Trial events share one log; the session index separates group IDs.
        ++session;
        log.emit(0.0, "TrialStarted", {{"configuration", to_string(config)}, {"trial", i}});
        const SessionOutcome o = runner.run_monitor(world, setup, trial_seed(sc.seed, i), session);
        log.emit(o.end_t, "TrialEnded",
                 {{"configuration", to_string(config)},
                  {"trial", i},
                  {"breach", o.breach},
                  {"alert", o.alert},
                  {"min_clearance_m", round_to(o.min_clearance, 6)}});
        ++row.trials;
        if (o.breach) ++row.breaches_detected;
        if (o.alert) ++row.enforcements;
      }
    }
  }
  stats.min_clearance = round_to(stats.min_clearance, 6);
  log.emit(stats.end_t, "RunEnded",
           {{"final_phase", stats.final_phase},
            {"min_clearance_m", stats.min_clearance},
            {"pfz_triggered", stats.pfz_triggered},
            {"pfz_violations", stats.pfz_violations}});
  result.report = detail::build_report(stats);
  return result;
}

RunResult run_scenario_file(const std::string& path, std::span<const std::string> overrides,
                            const RunOptions& opts) {
  return run_scenario(load_scenario(path, overrides), opts);
}

}  // namespace sdmon
