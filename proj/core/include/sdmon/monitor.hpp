#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sdmon/event_log.hpp"
#include "sdmon/geometry.hpp"
#include "sdmon/perception.hpp"
#include "sdmon/sensors.hpp"

namespace sdmon {

struct MonitorConfig {
  double distance_threshold = kSixFeet;
  double breach_duration = 5.0;      // T
  double compliance_duration = 3.0;
  double lock_hysteresis = 0.10;     // fraction of image width
  bool hold_timer_on_dropout = false;
  double standoff = 2.0;             // Attending starts at or below this
  double standoff_release = 0.5;     // back to Navigating beyond standoff + release
  double lock_lost_timeout = 1.0;
  double trail_spacing = 0.1;        // min spacing of CCTV breadcrumbs
};

// Ordered pedestrian pair, first < second.
using PairKey = std::pair<int, int>;

// Throws SelfPair when a == b.
PairKey make_pair_key(int a, int b);

struct PairTimer {
  PairKey pair;
  std::optional<double> below_since;
  bool breached = false;
};

struct BreachEvent {
  PairKey pair;
  double t_start = 0.0;
  double t_confirmed = 0.0;  // t_start + T
  Source source = Source::Rgbd;
  std::optional<double> resolved_at;
};

inline constexpr double kTimeEpsilon = 1e-9;

// Per-source below-threshold timers.
class PairTimers {
 public:
  explicit PairTimers(Source source = Source::Rgbd) : source_(source) {}

  Source source() const { return source_; }
  const std::map<PairKey, PairTimer>& timers() const { return timers_; }
  // A pair is below threshold but not yet confirmed.
  bool any_running() const;
  void reset(const PairKey& pair) { timers_.erase(pair); }

  // Throws TimeRegression when t goes backwards.
  std::vector<BreachEvent> update(std::span<const PairDistance> distances, double t,
                                  const MonitorConfig& cfg);

 private:
  Source source_;
  std::map<PairKey, PairTimer> timers_;
  std::optional<double> last_t_;
};

std::vector<BreachEvent> update_pair_timers(PairTimers& timers, std::span<const PairDistance> distances,
                                            double t, const MonitorConfig& cfg);

struct Group {
  std::vector<int> member_ids;  // ascending

  std::size_t size() const { return member_ids.size(); }
  bool contains(int id) const;
  bool overlaps(const Group& other) const;
  friend bool operator==(const Group&, const Group&) = default;
};

enum class GroupingMode {
  ConnectedComponents,
  // Single pass as printed: each pair is merged into every group it
  // intersects and groups are never merged with each other.
  Literal,
};

// Groups sorted by size descending, ties by smallest member. Throws SelfPair.
std::vector<Group> classify_groups(std::span<const std::pair<int, int>> non_compliant_pairs,
                                   GroupingMode mode = GroupingMode::ConnectedComponents);

// Merges groups seen by different cameras: overlapping member sets join.
std::vector<Group> merge_groups(std::span<const Group> a, std::span<const Group> b);

// argmin |x_cent - w/2| over members with boxes, ties to the smaller ID. A
// visible prev_lock is kept unless the best candidate beats its offset by
// more than hysteresis * w. Throws NoVisibleMember.
int select_locked(std::span<const int> members, std::span<const BoundingBox> boxes, int image_width,
                  std::optional<int> prev_lock, double hysteresis);

Point2 goal_from_rgbd(const LocalizedPedestrian& lp);
// Map-frame displacement to the pedestrian rotated into the robot frame.
Point2 goal_from_cctv(const LocalizedPedestrian& lp, const CctvCameraModel& cam, const Frame2& robot_pose);

enum class Phase { Idle, Lawnmower, Navigating, Attending };
std::string_view to_string(Phase p);

struct PursuitState {
  std::vector<Group> groups;
  std::optional<int> target_group;
  std::vector<int> target_members;
  std::optional<int> locked_id;
  std::optional<Point2> goal;      // robot frame
  std::optional<Point2> goal_map;  // map frame
  std::optional<Source> goal_source;
  bool goal_fresh = false;         // seen this tick
  std::vector<Point2> trail;       // map-frame breadcrumbs of the group centroid from CCTV
  Phase phase = Phase::Idle;
};

struct CameraObservation {
  std::vector<BoundingBox> boxes;
  // RGB-D: robot frame; CCTV: map frame.
  std::vector<LocalizedPedestrian> located;
  int image_width = 0;
};

struct MonitorInput {
  double t = 0.0;
  Frame2 robot_pose;
  std::optional<CameraObservation> rgbd;
  std::optional<CameraObservation> cctv;
};

// One engagement with a target group, from selection to resolution or loss.
struct AttendRecord {
  int group = 0;
  std::vector<int> members;
  double selected_at = 0.0;
  std::optional<double> alert_at;
  std::optional<double> resolved_at;
  std::optional<double> lost_at;
};

struct MonitorCounters {
  int breaches_rgbd = 0;
  int breaches_cctv = 0;
  int alerts = 0;
  int resolved = 0;
  int lock_lost = 0;
};

// Sequential monitor fed time-ordered frames: breach timers per camera, group
// classification, target and lock selection, goal arbitration and the
// enforcement phase. Every decision is written to the event log.
class Monitor {
 public:
  Monitor(MonitorConfig cfg, Phase patrol_phase, const CctvCameraModel* cctv = nullptr);

  const PursuitState& update(const MonitorInput& in, EventLog& log);

  const PursuitState& state() const { return state_; }
  const MonitorConfig& config() const { return cfg_; }
  const PairTimers& rgbd_timers() const { return rgbd_timers_; }
  const PairTimers& cctv_timers() const { return cctv_timers_; }
  const std::vector<BreachEvent>& breaches() const { return breaches_; }
  const MonitorCounters& counters() const { return counters_; }
  const std::vector<AttendRecord>& attend_records() const { return attend_; }

 private:
  struct TrackedGroup {
    int id = 0;
    Group group;
  };

  void ingest(const std::optional<CameraObservation>& obs, PairTimers& timers, std::set<PairKey>& confirmed,
              std::vector<PairDistance>& distances, double t, EventLog& log);
  void regroup(double t, EventLog& log);
  void update_target(const MonitorInput& in, EventLog& log);
  void update_compliance(double t, EventLog& log);
  void update_phase(double t, EventLog& log);
  void release_target(double t, bool resolved);
  void set_phase(Phase p, double t, EventLog& log);

  MonitorConfig cfg_;
  Phase patrol_phase_;
  const CctvCameraModel* cctv_;
  PairTimers rgbd_timers_{Source::Rgbd};
  PairTimers cctv_timers_{Source::Cctv};
  std::set<PairKey> confirmed_rgbd_;
  std::set<PairKey> confirmed_cctv_;
  std::vector<PairDistance> frame_distances_;
  std::vector<TrackedGroup> groups_;
  int next_group_id_ = 1;
  std::vector<BreachEvent> breaches_;
  MonitorCounters counters_;
  std::vector<AttendRecord> attend_;

  bool alerted_ = false;
  double last_seen_ = 0.0;
  std::optional<double> compliant_since_;
  PursuitState state_;
};

}  // namespace sdmon
