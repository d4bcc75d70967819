#include "sdmon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "sdmon/errors.hpp"

namespace sdmon {

std::string_view to_string(ExperimentKind k) { return k == ExperimentKind::Monitor ? "monitor" : "tracking"; }
std::string_view to_string(Patrol p) { return p == Patrol::Idle ? "idle" : "lawnmower"; }
std::string_view to_string(Configuration c) {
  switch (c) {
    case Configuration::CctvOnly:
      return "cctv_only";
    case Configuration::RobotOnly:
      return "robot_only";
    case Configuration::Hybrid:
      return "hybrid";
  }
  return "?";
}

namespace {

[[noreturn]] void parse_fail(const YAML::Node& node, const std::string& msg) {
  const auto mark = node.Mark();
  const int line = mark.line >= 0 ? mark.line + 1 : 0;
  const int col = mark.column >= 0 ? mark.column + 1 : 0;
  throw ParseError(line > 0 ? fmt::format("{}:{}: {}", line, col, msg) : msg, line, col);
}

template <class T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) parse_fail(node, path + ": expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    parse_fail(node, path + ": cannot read '" + node.Scalar() + "'");
  }
}

Point2 point(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() != 2) parse_fail(node, path + ": expected [x, y]");
  return {scalar<double>(node[0], path + "[0]"), scalar<double>(node[1], path + "[1]")};
}

// Map reader that rejects keys nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) parse_fail(node_, path_ + ": expected a mapping");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_ && node_.IsMap() && node_[key];
  }
  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node();
    return node_[key];
  }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  T get(const std::string& key, T def) {
    if (!has(key)) return def;
    return scalar<T>(node_[key], key_path(key));
  }
  template <class T>
  T require(const std::string& key) {
    if (!has(key)) parse_fail(node_, key_path(key) + ": missing required key");
    return scalar<T>(node_[key], key_path(key));
  }
  Point2 get_point(const std::string& key, Point2 def) {
    if (!has(key)) return def;
    return point(node_[key], key_path(key));
  }
  Point2 require_point(const std::string& key) {
    if (!has(key)) parse_fail(node_, key_path(key) + ": missing required key");
    return point(node_[key], key_path(key));
  }
  Section child(const std::string& key) { return Section(raw(key), key_path(key)); }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.contains(key)) parse_fail(kv.first, "unknown key '" + key_path(key) + "'");
    }
  }

 private:
  const YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

Frame2 frame(Section s) {
  const double x = s.get<double>("x_m", 0.0);
  const double y = s.get<double>("y_m", 0.0);
  const double yaw = s.get<double>("yaw_deg", 0.0);
  s.finish();
  return Frame2(deg_to_rad(yaw), {x, y});
}

Pedestrian pedestrian(const YAML::Node& node, const std::string& path) {
  Section s(node, path);
  Pedestrian p;
  p.id = s.require<int>("id");
  p.position = s.require_point("start");
  p.radius = s.get<double>("radius_m", 0.3);
  if (s.has("household_tag")) p.household_tag = s.get<int>("household_tag", 0);
  const YAML::Node script = s.raw("script");
  Point2 last = p.position;
  if (script) {
    if (!script.IsSequence()) parse_fail(script, s.key_path("script") + ": expected a list");
    for (std::size_t i = 0; i < script.size(); ++i) {
      Section leg(script[i], fmt::format("{}.script[{}]", path, i));
      ScriptLeg l;
      l.target = leg.get_point("target", last);
      l.speed_mps = leg.get<double>("speed_mps", 0.0);
      l.hold_s = leg.get<double>("hold_s", 0.0);
      leg.finish();
      last = l.target;
      p.script.push_back(l);
    }
  }
  s.finish();
  return p;
}

std::vector<Pedestrian> pedestrians(const YAML::Node& node, const std::string& path) {
  std::vector<Pedestrian> out;
  if (!node || node.IsNull()) return out;
  if (!node.IsSequence()) parse_fail(node, path + ": expected a list");
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(pedestrian(node[i], fmt::format("{}[{}]", path, i)));
  return out;
}

struct PathStep {
  std::string key;  // empty for an index step
  std::size_t index = 0;
};

std::vector<PathStep> split_path(const std::string& path) {
  std::vector<PathStep> steps;
  std::stringstream ss(path);
  std::string token;
  while (std::getline(ss, token, '.')) {
    const auto bracket = token.find('[');
    const std::string key = token.substr(0, bracket);
    if (key.empty()) throw ValidationError("override.path", "empty key in " + path);
    steps.push_back({key, 0});
    auto pos = bracket;
    while (pos != std::string::npos) {
      const auto close = token.find(']', pos);
      if (close == std::string::npos) throw ValidationError("override.path", "unbalanced '[' in " + path);
      try {
        steps.push_back({"", std::stoul(token.substr(pos + 1, close - pos - 1))});
      } catch (const std::exception&) {
        throw ValidationError("override.path", "bad index in " + path);
      }
      pos = token.find('[', close);
    }
  }
  if (steps.empty()) throw ValidationError("override.path", "empty override path");
  return steps;
}

// Node handles are passed by value: yaml-cpp's Node::operator= rewrites the
// referenced node instead of rebinding the handle.
void assign(YAML::Node node, const std::vector<PathStep>& steps, std::size_t i, const YAML::Node& value,
            const std::string& path) {
  const PathStep& step = steps[i];
  const bool last = i + 1 == steps.size();
  if (!step.key.empty()) {
    if (node.IsDefined() && !node.IsMap() && !node.IsNull())
      throw ValidationError("override.path", path + ": '" + step.key + "' is not inside a mapping");
    if (last) {
      node[step.key] = value;
      return;
    }
    assign(node[step.key], steps, i + 1, value, path);
    return;
  }
  if (!node.IsSequence() || step.index >= node.size())
    throw ValidationError("override.path", fmt::format("{}: index {} out of range", path, step.index));
  if (last) {
    node[step.index] = value;
    return;
  }
  assign(node[step.index], steps, i + 1, value, path);
}

void apply_override(YAML::Node root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override.syntax", "override needs path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ValidationError("override.value", "cannot parse value of " + path + ": " + e.what());
  }
  assign(root, split_path(path), 0, value, path);
}

void require(bool ok, const std::string& constraint, const std::string& what) {
  if (!ok) throw ValidationError(constraint, what);
}

void validate_pedestrians(const std::vector<Pedestrian>& peds, const std::string& where) {
  std::set<int> ids;
  for (const auto& p : peds) {
    require(ids.insert(p.id).second, "pedestrian.id.unique", fmt::format("{}: duplicate pedestrian id {}", where, p.id));
    require(p.radius >= 0.2 && p.radius <= 0.5, "pedestrian.radius",
            fmt::format("{}: pedestrian {} radius {} outside [0.2, 0.5] m", where, p.id, p.radius));
    require(p.position.finite(), "pedestrian.start", fmt::format("{}: pedestrian {} start not finite", where, p.id));
    for (const auto& leg : p.script) {
      require(leg.speed_mps >= 0.0 && leg.speed_mps <= kMaxPedestrianSpeed, "pedestrian.speed",
              fmt::format("{}: pedestrian {} speed {} outside [0, {}] m/s", where, p.id, leg.speed_mps,
                          kMaxPedestrianSpeed));
      require(leg.hold_s >= 0.0, "pedestrian.hold", fmt::format("{}: pedestrian {} negative hold", where, p.id));
      require(leg.target.finite(), "pedestrian.target", fmt::format("{}: pedestrian {} target not finite", where, p.id));
    }
  }
}

}  // namespace

void validate(const Scenario& sc) {
  const WorldState& w = sc.world;
  require(sc.duration > 0.0, "duration.positive", "duration_s must be positive");
  require(w.dt > 0.0 && w.dt <= 0.5, "world.dt", "world.dt_s must be in (0, 0.5]");
  require(w.bounds_max.x > w.bounds_min.x && w.bounds_max.y > w.bounds_min.y, "world.bounds",
          "world bounds_max must exceed bounds_min");
  for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
    const auto& poly = w.obstacles[i].polygon;
    require(poly.size() >= 3, "obstacle.vertices", fmt::format("obstacle {} needs 3 non-collinear vertices", i));
    for (const auto& v : poly.vertices())
      require(v.x >= w.bounds_min.x - 1e-9 && v.x <= w.bounds_max.x + 1e-9 && v.y >= w.bounds_min.y - 1e-9 &&
                  v.y <= w.bounds_max.y + 1e-9,
              "obstacle.within_bounds", fmt::format("obstacle {} leaves the world bounds", i));
  }
  validate_pedestrians(w.pedestrians, "pedestrians");
  const RobotState& r = w.robot;
  require(r.limits.v_max > 0.0 && r.limits.w_max > 0.0, "robot.limits", "robot velocity limits must be positive");
  require(r.radius > 0.0, "robot.radius", "robot radius must be positive");

  const auto& cam = sc.rgbd.model;
  require(cam.fov > 0.0 && cam.fov < kPi, "rgbd.fov", "rgbd fov must be in (0, 180) degrees");
  require(cam.near > 0.0 && cam.near < cam.range, "rgbd.range", "rgbd near_m must be below range_m");
  require(cam.width > 0 && cam.height > 0, "rgbd.resolution", "rgbd resolution must be positive");
  require(cam.noise_sigma_depth >= 0.0, "rgbd.noise", "rgbd noise must be non-negative");
  require(cam.min_visible_fraction >= 0.0 && cam.min_visible_fraction < 1.0, "rgbd.min_visible_fraction",
          "min_visible_fraction must be in [0, 1)");
  if (sc.cctv.enabled) {
    require(sc.cctv.rect_width > 0.0 && sc.cctv.rect_height > 0.0 && sc.cctv.pixels_per_meter > 0.0,
            "cctv.rectangle", "cctv rectangle and pixels_per_meter must be positive");
  }
  require(sc.lidar.beams >= 1 && sc.lidar.max_range > 0.0, "lidar", "lidar needs beams and a positive range");

  const auto& m = sc.monitor;
  require(m.distance_threshold > 0.0 && m.breach_duration > 0.0 && m.compliance_duration > 0.0 &&
              m.lock_hysteresis >= 0.0 && m.standoff > 0.0 && m.lock_lost_timeout > 0.0,
          "monitor.positive", "monitor thresholds must be positive");

  if (sc.kind == ExperimentKind::Tracking) {
    require(sc.tracking_target.has_value(), "tracking.target", "tracking experiments need tracking.target_id");
    require(w.find_pedestrian(*sc.tracking_target) != nullptr, "tracking.target",
            fmt::format("tracking target {} is not a pedestrian", *sc.tracking_target));
  }
  if (sc.sweep) {
    require(!sc.sweep->configurations.empty(), "sweep.configurations", "sweep needs configurations");
    require(!sc.sweep->trials.empty(), "sweep.trials", "sweep needs trials");
    require(sc.sweep->trial_duration > 0.0, "sweep.trial_duration", "trial_duration_s must be positive");
    for (auto c : sc.sweep->configurations)
      require(c == Configuration::RobotOnly || sc.cctv.enabled, "sweep.cctv",
              fmt::format("configuration {} needs an enabled cctv camera", to_string(c)));
    for (std::size_t i = 0; i < sc.sweep->trials.size(); ++i) {
      auto all = w.pedestrians;
      all.insert(all.end(), sc.sweep->trials[i].begin(), sc.sweep->trials[i].end());
      validate_pedestrians(all, fmt::format("sweep.trials[{}]", i));
    }
  }
}

Scenario parse_scenario(const std::string& text, std::span<const std::string> overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.what(), e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) parse_fail(root, "scenario must be a mapping");
  for (const auto& o : overrides) apply_override(root, o);

  Scenario sc;
  Section top(root, "");
  sc.experiment = top.get<std::string>("experiment", "");
  const auto kind = top.get<std::string>("kind", "monitor");
  if (kind == "monitor") {
    sc.kind = ExperimentKind::Monitor;
  } else if (kind == "tracking") {
    sc.kind = ExperimentKind::Tracking;
  } else {
    parse_fail(top.raw("kind"), "kind must be monitor or tracking");
  }
  sc.duration = top.get<double>("duration_s", 60.0);
  sc.seed = top.get<std::uint64_t>("seed", 0);

  {
    Section w = top.child("world");
    sc.world.dt = w.get<double>("dt_s", 0.1);
    sc.world.bounds_min = w.require_point("bounds_min");
    sc.world.bounds_max = w.require_point("bounds_max");
    const YAML::Node obstacles = w.raw("obstacles");
    if (obstacles) {
      if (!obstacles.IsSequence()) parse_fail(obstacles, "world.obstacles: expected a list");
      for (std::size_t i = 0; i < obstacles.size(); ++i) {
        Section o(obstacles[i], fmt::format("world.obstacles[{}]", i));
        const YAML::Node verts = o.raw("vertices");
        if (!verts || !verts.IsSequence()) parse_fail(obstacles[i], o.key_path("vertices") + ": expected a list");
        std::vector<Point2> pts;
        for (std::size_t k = 0; k < verts.size(); ++k) pts.push_back(point(verts[k], o.key_path("vertices")));
        o.finish();
        if (pts.empty()) parse_fail(verts, o.key_path("vertices") + ": empty");
        sc.world.obstacles.push_back({convex_hull(pts)});
      }
    }
    w.finish();
  }

  sc.world.pedestrians = pedestrians(top.raw("pedestrians"), "pedestrians");

  {
    Section r = top.child("robot");
    RobotState& robot = sc.world.robot;
    const Point2 start = r.get_point("start", {0.0, 0.0});
    robot.pose = Frame2(deg_to_rad(r.get<double>("heading_deg", 0.0)), start);
    robot.limits.v_max = r.get<double>("v_max_mps", 0.75);
    robot.limits.w_max = r.get<double>("w_max_radps", 0.75);
    robot.radius = r.get<double>("radius_m", 0.2);
    robot.safety_margin = r.get<double>("safety_margin_m", 0.05);
    const auto patrol = r.get<std::string>("patrol", "lawnmower");
    if (patrol == "lawnmower") {
      sc.patrol = Patrol::Lawnmower;
    } else if (patrol == "idle") {
      sc.patrol = Patrol::Idle;
    } else {
      parse_fail(r.raw("patrol"), "robot.patrol must be lawnmower or idle");
    }
    r.finish();
  }

  {
    Section cams = top.child("cameras");
    {
      const bool listed = cams.has("rgbd");
      Section c = cams.child("rgbd");
      auto& m = sc.rgbd.model;
      sc.rgbd.enabled = c.get<bool>("enabled", listed);
      m.fov = deg_to_rad(c.get<double>("fov_deg", 70.0));
      // No detection range is assumed for an active camera.
      m.range = sc.rgbd.enabled ? c.require<double>("range_m") : c.get<double>("range_m", m.range);
      m.near = c.get<double>("near_m", 0.3);
      m.width = c.get<int>("width_px", 640);
      m.height = c.get<int>("height_px", 480);
      if (c.has("mount")) m.mount = frame(c.child("mount"));
      m.mount_height = c.get<double>("mount_height_m", 1.0);
      m.noise_sigma_depth = c.get<double>("noise_sigma_depth_m", 0.02);
      m.depth_quantum = c.get<double>("depth_quantum_m", 0.001);
      m.min_visible_fraction = c.get<double>("min_visible_fraction", 0.5);
      sc.rgbd.reassign_id_on_reentry = c.get<bool>("reassign_id_on_reentry", false);
      c.finish();
    }
    {
      Section c = cams.child("cctv");
      auto& s = sc.cctv;
      s.enabled = c.has("image_corners_px") && c.get<bool>("enabled", true);
      if (c.has("image_corners_px")) {
        const YAML::Node corners = c.raw("image_corners_px");
        if (!corners.IsSequence() || corners.size() != 4)
          parse_fail(corners, "cameras.cctv.image_corners_px: expected 4 points");
        for (std::size_t i = 0; i < 4; ++i) s.image_corners[i] = point(corners[i], "cameras.cctv.image_corners_px");
        s.rect_width = c.require<double>("rect_width_m");
        s.rect_height = c.require<double>("rect_height_m");
        s.pixels_per_meter = c.get<double>("pixels_per_meter", 100.0);
        const Frame2 gnd_to_map = c.has("gnd_to_map") ? frame(c.child("gnd_to_map")) : Frame2();
        const int width = c.get<int>("width_px", 1920);
        const int height = c.get<int>("height_px", 1080);
        if (s.enabled) {
          try {
            s.model = CctvCameraModel::from_rectangle(s.image_corners, s.rect_width, s.rect_height,
                                                      s.pixels_per_meter, gnd_to_map, width, height);
          } catch (const DegenerateCorrespondence& e) {
            throw ValidationError("cctv.corners", std::string("cctv image corners: ") + e.what());
          }
        }
        s.model.eye = c.require_point("eye");
        s.model.eye_height = c.get<double>("eye_height_m", 3.0);
        s.model.min_visible_fraction = c.get<double>("min_visible_fraction", 0.5);
        s.reassign_id_on_reentry = c.get<bool>("reassign_id_on_reentry", false);
      }
      c.finish();
    }
    {
      Section c = cams.child("lidar");
      sc.lidar.beams = c.get<int>("beams", 241);
      sc.lidar.fov = deg_to_rad(c.get<double>("fov_deg", 240.0));
      sc.lidar.max_range = c.get<double>("max_range_m", 10.0);
      c.finish();
    }
    cams.finish();
  }

  {
    Section m = top.child("monitor");
    auto& c = sc.monitor;
    c.distance_threshold = m.get<double>("distance_threshold_m", kSixFeet);
    c.breach_duration = m.get<double>("breach_duration_s", 5.0);
    c.compliance_duration = m.get<double>("compliance_duration_s", 3.0);
    c.lock_hysteresis = m.get<double>("lock_hysteresis", 0.10);
    c.hold_timer_on_dropout = m.get<bool>("hold_timer_on_dropout", false);
    c.standoff = m.get<double>("standoff_m", 2.0);
    c.standoff_release = m.get<double>("standoff_release_m", 0.5);
    c.lock_lost_timeout = m.get<double>("lock_lost_timeout_s", 1.0);
    c.trail_spacing = m.get<double>("trail_spacing_m", 0.1);
    m.finish();
  }

  {
    Section p = top.child("planner");
    auto& c = sc.planner;
    c.horizon = p.get<double>("horizon_s", 1.0);
    c.trigger_distance = p.get<double>("trigger_distance_m", 3.0);
    c.stop_distance = p.get<double>("stop_distance_m", 0.5);
    c.heading_gain = p.get<double>("heading_gain", 2.0);
    c.trail_lookahead = p.get<double>("trail_lookahead_m", 0.5);
    c.waypoint_tolerance = p.get<double>("waypoint_tolerance_m", 0.3);
    if (p.has("lane_spacing_m")) c.lane_spacing = p.get<double>("lane_spacing_m", 0.0);
    p.finish();
  }

  if (top.has("tracking")) {
    Section t = top.child("tracking");
    sc.tracking_target = t.require<int>("target_id");
    t.finish();
  }

  if (top.has("sweep")) {
    Section s = top.child("sweep");
    Sweep sweep;
    const YAML::Node configs = s.raw("configurations");
    if (!configs || !configs.IsSequence()) parse_fail(root, "sweep.configurations: expected a list");
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto name = scalar<std::string>(configs[i], "sweep.configurations");
      if (name == "cctv_only") {
        sweep.configurations.push_back(Configuration::CctvOnly);
      } else if (name == "robot_only") {
        sweep.configurations.push_back(Configuration::RobotOnly);
      } else if (name == "hybrid") {
        sweep.configurations.push_back(Configuration::Hybrid);
      } else {
        parse_fail(configs[i], "unknown configuration '" + name + "'");
      }
    }
    sweep.trial_duration = s.get<double>("trial_duration_s", 30.0);
    const YAML::Node trials = s.raw("trials");
    if (!trials || !trials.IsSequence()) parse_fail(root, "sweep.trials: expected a list");
    for (std::size_t i = 0; i < trials.size(); ++i) {
      Section trial(trials[i], fmt::format("sweep.trials[{}]", i));
      sweep.trials.push_back(pedestrians(trial.raw("pedestrians"), trial.key_path("pedestrians")));
      trial.finish();
    }
    s.finish();
    sc.sweep = std::move(sweep);
  }
  top.finish();

  sc.world.rng_seed = sc.seed;
  validate(sc);
  return sc;
}

Scenario load_scenario(const std::string& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), overrides);
}

double lane_spacing(const Scenario& sc) { return sc.planner.lane_spacing.value_or(sc.rgbd.model.range); }

LawnmowerPlan scenario_lawnmower(const Scenario& sc) {
  const ConvexPolygon footprint = sc.cctv.enabled ? sc.cctv.model.footprint : ConvexPolygon();
  return lawnmower_waypoints(sc.world.bounds_min, sc.world.bounds_max, footprint, lane_spacing(sc),
                             sc.rgbd.model.range);
}

}  // namespace sdmon
