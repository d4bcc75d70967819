#include "sdmon/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdmon/errors.hpp"

namespace sdmon {

PairKey make_pair_key(int a, int b) {
  if (a == b) throw SelfPair("pair (" + std::to_string(a) + ", " + std::to_string(b) + ") repeats an ID");
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

bool PairTimers::any_running() const {
  return std::any_of(timers_.begin(), timers_.end(),
                     [](const auto& kv) { return kv.second.below_since && !kv.second.breached; });
}

std::vector<BreachEvent> PairTimers::update(std::span<const PairDistance> distances, double t,
                                            const MonitorConfig& cfg) {
  if (last_t_ && t < *last_t_)
    throw TimeRegression("pair timers fed t=" + std::to_string(t) + " after t=" + std::to_string(*last_t_));
  last_t_ = t;

  std::vector<BreachEvent> out;
  std::set<PairKey> seen;
  for (const auto& d : distances) {
    const PairKey key = make_pair_key(d.id_a, d.id_b);
    seen.insert(key);
    PairTimer& timer = timers_[key];
    timer.pair = key;
    if (d.distance >= cfg.distance_threshold) {
      timer.below_since.reset();
      timer.breached = false;
      continue;
    }
    if (!timer.below_since) timer.below_since = t;
    if (!timer.breached && t - *timer.below_since >= cfg.breach_duration - kTimeEpsilon) {
      timer.breached = true;
      out.push_back({key, *timer.below_since, *timer.below_since + cfg.breach_duration, source_, std::nullopt});
    }
  }
  if (!cfg.hold_timer_on_dropout) {
    for (auto it = timers_.begin(); it != timers_.end();) {
      if (!seen.contains(it->first)) {
        it = timers_.erase(it);
      } else {
        ++it;
      }
    }
  }
  return out;
}

std::vector<BreachEvent> update_pair_timers(PairTimers& timers, std::span<const PairDistance> distances,
                                            double t, const MonitorConfig& cfg) {
  return timers.update(distances, t, cfg);
}

bool Group::contains(int id) const { return std::binary_search(member_ids.begin(), member_ids.end(), id); }

bool Group::overlaps(const Group& other) const {
  return std::any_of(other.member_ids.begin(), other.member_ids.end(), [&](int id) { return contains(id); });
}

namespace {

class UnionFind {
 public:
  int find(int x) {
    auto it = parent_.find(x);
    if (it == parent_.end()) {
      parent_[x] = x;
      return x;
    }
    if (it->second == x) return x;
    const int root = find(it->second);
    parent_[x] = root;
    return root;
  }
  void unite(int a, int b) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) parent_[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<Group> components() {
    std::map<int, Group> by_root;
    std::vector<int> keys;
    for (const auto& kv : parent_) keys.push_back(kv.first);
    for (int k : keys) by_root[find(k)].member_ids.push_back(k);
    std::vector<Group> out;
    for (auto& kv : by_root) out.push_back(std::move(kv.second));
    return out;
  }

 private:
  std::map<int, int> parent_;
};

void sort_groups(std::vector<Group>& groups) {
  for (auto& g : groups) std::sort(g.member_ids.begin(), g.member_ids.end());
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.member_ids < b.member_ids;
  });
}

std::vector<Group> literal_groups(std::span<const std::pair<int, int>> pairs) {
  std::vector<std::set<int>> groups;
  if (pairs.empty()) return {};
  groups.push_back({pairs[0].first, pairs[0].second});
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    const std::set<int> pair{pairs[i].first, pairs[i].second};
    const std::size_t len = groups.size();
    std::size_t misses = 0;
    for (std::size_t j = 0; j < len; ++j) {
      const bool hit = std::any_of(pair.begin(), pair.end(), [&](int id) { return groups[j].contains(id); });
      if (hit) {
        groups[j].insert(pair.begin(), pair.end());
      } else {
        ++misses;
      }
    }
    if (misses == len) groups.push_back(pair);
  }
  std::vector<Group> out;
  for (const auto& g : groups) out.push_back({std::vector<int>(g.begin(), g.end())});
  return out;
}

}  // namespace

std::vector<Group> classify_groups(std::span<const std::pair<int, int>> pairs, GroupingMode mode) {
  for (const auto& p : pairs) make_pair_key(p.first, p.second);
  std::vector<Group> out;
  if (mode == GroupingMode::Literal) {
    out = literal_groups(pairs);
  } else {
    UnionFind uf;
    for (const auto& p : pairs) uf.unite(p.first, p.second);
    out = uf.components();
  }
  sort_groups(out);
  return out;
}

std::vector<Group> merge_groups(std::span<const Group> a, std::span<const Group> b) {
  UnionFind uf;
  auto add = [&](const Group& g) {
    for (int id : g.member_ids) uf.unite(g.member_ids.front(), id);
  };
  for (const auto& g : a)
    if (!g.member_ids.empty()) add(g);
  for (const auto& g : b)
    if (!g.member_ids.empty()) add(g);
  auto out = uf.components();
  sort_groups(out);
  return out;
}

int select_locked(std::span<const int> members, std::span<const BoundingBox> boxes, int image_width,
                  std::optional<int> prev_lock, double hysteresis) {
  const double center = 0.5 * image_width;
  std::optional<int> best;
  double best_off = 0.0;
  std::optional<double> prev_off;
  for (const auto& b : boxes) {
    if (std::find(members.begin(), members.end(), b.ped_id) == members.end()) continue;
    const double off = std::abs(b.centroid().x - center);
    if (!best || off < best_off || (off == best_off && b.ped_id < *best)) {
      best = b.ped_id;
      best_off = off;
    }
    if (prev_lock && b.ped_id == *prev_lock) prev_off = off;
  }
  if (!best) throw NoVisibleMember("no group member has a box in this camera");
  if (prev_off && *prev_off - best_off <= hysteresis * image_width) return *prev_lock;
  return *best;
}

Point2 goal_from_rgbd(const LocalizedPedestrian& lp) { return lp.position; }

Point2 goal_from_cctv(const LocalizedPedestrian& lp, const CctvCameraModel& cam, const Frame2& robot_pose) {
  const Point2 map = lp.frame == FrameTag::Ground ? cam.gnd_to_map.apply(lp.position) : lp.position;
  return rotate(map - robot_pose.translation(), -robot_pose.rotation());
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Idle:
      return "Idle";
    case Phase::Lawnmower:
      return "Lawnmower";
    case Phase::Navigating:
      return "Navigating";
    case Phase::Attending:
      return "Attending";
  }
  return "?";
}

namespace {

Json members_json(const std::vector<int>& ids) { return Json(ids); }

Json opt_json(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

Json opt_json(const std::optional<Source>& v) { return v ? Json(std::string(to_string(*v))) : Json(nullptr); }

}  // namespace

Monitor::Monitor(MonitorConfig cfg, Phase patrol_phase, const CctvCameraModel* cctv)
    : cfg_(cfg), patrol_phase_(patrol_phase), cctv_(cctv) {
  state_.phase = patrol_phase_;
}

void Monitor::ingest(const std::optional<CameraObservation>& obs, PairTimers& timers,
                     std::set<PairKey>& confirmed, std::vector<PairDistance>& distances, double t,
                     EventLog& log) {
  if (!obs) return;
  const auto d = pairwise_distances(obs->located);
  for (const auto& ev : timers.update(d, t, cfg_)) {
    breaches_.push_back(ev);
    confirmed.insert(ev.pair);
    if (ev.source == Source::Rgbd) {
      ++counters_.breaches_rgbd;
    } else {
      ++counters_.breaches_cctv;
    }
    log.emit(t, "BreachConfirmed",
             {{"source", to_string(ev.source)},
              {"a", ev.pair.first},
              {"b", ev.pair.second},
              {"t_start", round_to(ev.t_start, 3)},
              {"t_confirmed", round_to(ev.t_confirmed, 3)}});
  }
  distances.insert(distances.end(), d.begin(), d.end());
}

void Monitor::regroup(double t, EventLog& log) {
  std::vector<std::pair<int, int>> rgbd(confirmed_rgbd_.begin(), confirmed_rgbd_.end());
  std::vector<std::pair<int, int>> cctv(confirmed_cctv_.begin(), confirmed_cctv_.end());
  const auto a = classify_groups(rgbd);
  const auto b = classify_groups(cctv);
  const auto merged = merge_groups(a, b);

  std::vector<TrackedGroup> next;
  std::vector<bool> used(groups_.size(), false);
  for (const auto& g : merged) {
    std::optional<std::size_t> match;
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (used[i]) continue;
      const auto& prev = groups_[i].group.member_ids;
      const auto overlap = static_cast<std::size_t>(
          std::count_if(prev.begin(), prev.end(), [&](int id) { return g.contains(id); }));
      if (overlap > best_overlap || (overlap == best_overlap && overlap > 0 && match &&
                                     groups_[i].id < groups_[*match].id)) {
        best_overlap = overlap;
        match = i;
      }
    }
    if (match) {
      used[*match] = true;
      next.push_back({groups_[*match].id, g});
    } else {
      next.push_back({next_group_id_++, g});
      log.emit(t, "GroupFormed", {{"group", next.back().id}, {"members", members_json(g.member_ids)}});
    }
  }
  groups_ = std::move(next);
  state_.groups.clear();
  for (const auto& tg : groups_) state_.groups.push_back(tg.group);
}

void Monitor::update_target(const MonitorInput& in, EventLog& log) {
  const double t = in.t;
  if (state_.target_group) {
    const TrackedGroup* found = nullptr;
    for (const auto& tg : groups_)
      if (tg.id == *state_.target_group) found = &tg;
    if (!found) {
      const Group current{state_.target_members};
      for (const auto& tg : groups_)
        if (!found && tg.group.overlaps(current)) found = &tg;
    }
    if (!found) {
      release_target(t, false);
    } else {
      state_.target_group = found->id;
      state_.target_members = found->group.member_ids;
    }
  }
  if (!state_.target_group && !groups_.empty()) {
    const TrackedGroup& tg = groups_.front();
    state_.target_group = tg.id;
    state_.target_members = tg.group.member_ids;
    alerted_ = false;
    last_seen_ = t;
    compliant_since_.reset();
    attend_.push_back({tg.id, tg.group.member_ids, t, std::nullopt, std::nullopt, std::nullopt});
    log.emit(t, "TargetSelected", {{"group", tg.id}, {"members", members_json(tg.group.member_ids)}});
  }
  if (!state_.target_group) return;

  const Group members{state_.target_members};
  auto visible = [&](const std::optional<CameraObservation>& obs) {
    std::vector<const LocalizedPedestrian*> out;
    if (!obs) return out;
    for (const auto& lp : obs->located)
      if (members.contains(lp.ped_id)) out.push_back(&lp);
    return out;
  };
  auto boxes_of = [&](const CameraObservation& obs, const std::vector<const LocalizedPedestrian*>& vis) {
    std::vector<BoundingBox> out;
    for (const auto& b : obs.boxes)
      if (std::any_of(vis.begin(), vis.end(), [&](const auto* lp) { return lp->ped_id == b.ped_id; }))
        out.push_back(b);
    return out;
  };
  auto find_lp = [](const std::vector<const LocalizedPedestrian*>& vis, int id) {
    for (const auto* lp : vis)
      if (lp->ped_id == id) return lp;
    return vis.front();
  };

  const auto cctv_vis = visible(in.cctv);
  const auto rgbd_vis = visible(in.rgbd);
  std::optional<Source> source;
  int lock = 0;
  if (!cctv_vis.empty()) {
    source = Source::Cctv;
    const auto boxes = boxes_of(*in.cctv, cctv_vis);
    lock = select_locked(state_.target_members, boxes, in.cctv->image_width, state_.locked_id,
                         cfg_.lock_hysteresis);
    const LocalizedPedestrian* lp = find_lp(cctv_vis, lock);
    const Point2 map = (lp->frame == FrameTag::Ground && cctv_) ? cctv_->gnd_to_map.apply(lp->position)
                                                                : lp->position;
    state_.goal_map = map;
    state_.goal = rotate(map - in.robot_pose.translation(), -in.robot_pose.rotation());
    Point2 centroid{};
    for (const auto* v : cctv_vis)
      centroid += (v->frame == FrameTag::Ground && cctv_) ? cctv_->gnd_to_map.apply(v->position) : v->position;
    centroid = centroid / static_cast<double>(cctv_vis.size());
    if (state_.trail.empty() || distance(state_.trail.back(), centroid) >= cfg_.trail_spacing)
      state_.trail.push_back(centroid);
  } else if (!rgbd_vis.empty()) {
    source = Source::Rgbd;
    const auto boxes = boxes_of(*in.rgbd, rgbd_vis);
    lock = select_locked(state_.target_members, boxes, in.rgbd->image_width, state_.locked_id,
                         cfg_.lock_hysteresis);
    const LocalizedPedestrian* lp = find_lp(rgbd_vis, lock);
    state_.goal = goal_from_rgbd(*lp);
    state_.goal_map = in.robot_pose.apply(*state_.goal);
  }

  if (source) {
    last_seen_ = t;
    state_.goal_fresh = true;
    if (state_.locked_id != lock) {
      log.emit(t, "LockChanged",
               {{"group", *state_.target_group},
                {"from", opt_json(state_.locked_id)},
                {"to", lock},
                {"source", to_string(*source)}});
      state_.locked_id = lock;
    }
    if (state_.goal_source != source) {
      log.emit(t, "GoalSourceChanged",
               {{"group", *state_.target_group}, {"from", opt_json(state_.goal_source)}, {"to", to_string(*source)}});
      state_.goal_source = source;
    }
    return;
  }

  state_.goal_fresh = false;
  if (t - last_seen_ > cfg_.lock_lost_timeout + kTimeEpsilon) {
    ++counters_.lock_lost;
    attend_.back().lost_at = t;
    log.emit(t, "LockLost",
             {{"group", *state_.target_group},
              {"lock", opt_json(state_.locked_id)},
              {"last_seen", round_to(last_seen_, 3)}});
    release_target(t, false);
    return;
  }
  if (state_.goal_map)
    state_.goal = rotate(*state_.goal_map - in.robot_pose.translation(), -in.robot_pose.rotation());
}

void Monitor::update_compliance(double t, EventLog& log) {
  if (!state_.target_group) return;
  const Group members{state_.target_members};
  bool observed = false, compliant = true;
  for (const auto& d : frame_distances_) {
    if (!members.contains(d.id_a) || !members.contains(d.id_b)) continue;
    observed = true;
    if (d.distance < cfg_.distance_threshold) compliant = false;
  }
  if (!observed || !compliant) {
    compliant_since_.reset();
    return;
  }
  if (!compliant_since_) compliant_since_ = t;
  if (t - *compliant_since_ < cfg_.compliance_duration - kTimeEpsilon) return;

  ++counters_.resolved;
  attend_.back().resolved_at = t;
  log.emit(t, "GroupResolved",
           {{"group", *state_.target_group},
            {"members", members_json(state_.target_members)},
            {"alerted", alerted_},
            {"compliant_since", round_to(*compliant_since_, 3)}});
  release_target(t, true);
}

void Monitor::release_target(double t, bool resolved) {
  const Group members{state_.target_members};
  auto inside = [&](const PairKey& k) { return members.contains(k.first) && members.contains(k.second); };
  for (auto* confirmed : {&confirmed_rgbd_, &confirmed_cctv_})
    std::erase_if(*confirmed, inside);
  for (auto* timers : {&rgbd_timers_, &cctv_timers_}) {
    std::vector<PairKey> drop;
    for (const auto& kv : timers->timers())
      if (inside(kv.first)) drop.push_back(kv.first);
    for (const auto& k : drop) timers->reset(k);
  }
  if (resolved) {
    for (auto& b : breaches_)
      if (inside(b.pair) && !b.resolved_at) b.resolved_at = t;
  }
  if (state_.target_group)
    std::erase_if(groups_, [&](const TrackedGroup& tg) { return tg.id == *state_.target_group; });
  state_.groups.clear();
  for (const auto& tg : groups_) state_.groups.push_back(tg.group);

  state_.target_group.reset();
  state_.target_members.clear();
  state_.locked_id.reset();
  state_.goal.reset();
  state_.goal_map.reset();
  state_.goal_source.reset();
  state_.goal_fresh = false;
  state_.trail.clear();
  compliant_since_.reset();
  alerted_ = false;
}

void Monitor::set_phase(Phase p, double t, EventLog& log) {
  if (p == state_.phase) return;
  log.emit(t, "PhaseChanged", {{"from", to_string(state_.phase)}, {"to", to_string(p)}});
  state_.phase = p;
}

void Monitor::update_phase(double t, EventLog& log) {
  if (!state_.target_group || !state_.goal) {
    if (!state_.target_group) set_phase(patrol_phase_, t, log);
    return;
  }
  const double dist = state_.goal->norm();
  if (state_.phase == Phase::Attending) {
    if (dist > cfg_.standoff + cfg_.standoff_release) set_phase(Phase::Navigating, t, log);
    return;
  }
  if (dist <= cfg_.standoff) {
    set_phase(Phase::Attending, t, log);
    if (!alerted_) {
      alerted_ = true;
      ++counters_.alerts;
      attend_.back().alert_at = t;
      log.emit(t, "AlertIssued",
               {{"group", *state_.target_group},
                {"members", members_json(state_.target_members)},
                {"lock", opt_json(state_.locked_id)},
                {"distance_m", round_to(dist, 3)}});
    }
    return;
  }
  set_phase(Phase::Navigating, t, log);
}

const PursuitState& Monitor::update(const MonitorInput& in, EventLog& log) {
  frame_distances_.clear();
  ingest(in.rgbd, rgbd_timers_, confirmed_rgbd_, frame_distances_, in.t, log);
  ingest(in.cctv, cctv_timers_, confirmed_cctv_, frame_distances_, in.t, log);
  regroup(in.t, log);
  update_target(in, log);
  update_compliance(in.t, log);
  update_phase(in.t, log);
  return state_;
}

}  // namespace sdmon
