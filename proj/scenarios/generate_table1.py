#!/usr/bin/env python3
"""Writes table1_case{1,2,3}.scn: 40 breach locations, 20 inside the CCTV
footprint and 20 outside it.

Case 1: static robot, 10 of the outside pairs inside its FOV cone and range.
Case 2: as case 1, plus one occluder per pair for 3 of those 10, hiding
        exactly half of one member from the robot camera.
Case 3: the robot patrols the blind spot with the lawnmower; every outside
        pair lies in view of one of the two lanes.

The geometry is checked here; the counts are left to the simulator.
"""
import math
import random
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent
SEED = 20210406

BOUNDS = (20.0, 12.0)
FOOTPRINT = (9.0, 12.0)  # CCTV rectangle from the origin, map frame
CCTV_EYE = (4.5, -3.0)
FOV = math.radians(70.0)
RANGE = 6.0
RADIUS = 0.3
PAIR_GAP = 1.0
THRESHOLD = 1.8288

STATIC_ROBOT = (14.5, 1.0, 90.0)  # x, y, heading_deg
LAWN_ROBOT = (12.5, 0.0, 90.0)
LANES = (12.5, 17.5)  # x of the two outside lanes, 6 m spacing over 20 m


def perp_pair(center, viewer):
    """Members 1 m apart across the line of sight from `viewer`."""
    dx, dy = center[0] - viewer[0], center[1] - viewer[1]
    n = math.hypot(dx, dy)
    ux, uy = -dy / n, dx / n
    h = PAIR_GAP / 2
    return [(center[0] - h * ux, center[1] - h * uy), (center[0] + h * ux, center[1] + h * uy)]


def rel_view(p, cam):
    x, y, heading = cam
    d = math.hypot(p[0] - x, p[1] - y)
    rel = math.atan2(p[1] - y, p[0] - x) - math.radians(heading)
    rel = (rel + math.pi) % (2 * math.pi) - math.pi
    return d, rel


def fully_in_view(p, cam, range_margin=0.4, angle_margin=math.radians(3)):
    d, rel = rel_view(p, cam)
    half = math.asin(min(1.0, RADIUS / d))
    return 0.8 < d < RANGE - range_margin and abs(rel) + half < FOV / 2 - angle_margin


def clearly_out_of_view(p, cam):
    d, rel = rel_view(p, cam)
    if d > RANGE + 0.5:
        return True
    half = math.asin(min(1.0, RADIUS / d)) if d > RADIUS else math.pi
    return abs(rel) - half > FOV / 2 + math.radians(5)


def inside_footprint(p, margin):
    return margin <= p[0] <= FOOTPRINT[0] - margin and margin <= p[1] <= FOOTPRINT[1] - margin


def in_bounds(p, margin=0.5):
    return margin <= p[0] <= BOUNDS[0] - margin and margin <= p[1] <= BOUNDS[1] - margin


def far_from(p, q, dist):
    return math.hypot(p[0] - q[0], p[1] - q[1]) >= dist


def seen_from_lanes(members):
    """Both members fully in view from some pose on lane 1 heading north or
    lane 2 heading south."""
    for lane, heading in ((LANES[0], 90.0), (LANES[1], -90.0)):
        for k in range(0, 121):
            y = k * 0.1
            cam = (lane, y, heading)
            if all(fully_in_view(m, cam, range_margin=0.8, angle_margin=math.radians(6)) for m in members):
                return True
    return False


def sample_inside(rng, count):
    out = []
    while len(out) < count:
        c = (rng.uniform(1.5, 5.0), rng.uniform(2.0, 10.5))
        members = perp_pair(c, CCTV_EYE)
        if not all(inside_footprint(m, 0.8) for m in members):
            continue
        if any(not far_from(m, (LANES[0], m[1]), RANGE + 1.0) for m in members):
            continue
        out.append(members)
    return out


def sample_outside_in_fov(rng, count):
    out = []
    x, y, heading = STATIC_ROBOT
    while len(out) < count:
        rho = rng.uniform(3.0, 5.0)
        rel = math.radians(rng.uniform(-22.0, 22.0))
        a = math.radians(heading) + rel
        c = (x + rho * math.cos(a), y + rho * math.sin(a))
        members = perp_pair(c, (x, y))
        if not all(fully_in_view(m, STATIC_ROBOT) and in_bounds(m) for m in members):
            continue
        if not all(m[0] > FOOTPRINT[0] + 1.0 for m in members):
            continue
        out.append(members)
    return out


def sample_outside_hidden(rng, count):
    out = []
    while len(out) < count:
        c = (rng.uniform(10.5, 19.5), rng.uniform(0.5, 11.5))
        members = perp_pair(c, STATIC_ROBOT[:2])
        if not all(in_bounds(m) and clearly_out_of_view(m, STATIC_ROBOT) for m in members):
            continue
        if not all(far_from(m, STATIC_ROBOT[:2], 1.5) for m in members):
            continue
        if not all(far_from(m, LAWN_ROBOT[:2], 1.0) for m in members):
            continue
        out.append(members)
    return out


def sample_outside_lawn(rng, count):
    out = []
    while len(out) < count:
        c = (rng.uniform(10.5, 19.5), rng.uniform(1.0, 11.0))
        members = [(c[0] - PAIR_GAP / 2, c[1]), (c[0] + PAIR_GAP / 2, c[1])]
        if not all(in_bounds(m) and m[0] > FOOTPRINT[0] + 1.0 for m in members):
            continue
        # Keep the lanes themselves clear so the patrol is never blocked.
        if any(abs(m[0] - lane) < 1.0 for m in members for lane in LANES):
            continue
        if not seen_from_lanes(members):
            continue
        out.append(members)
    return out


def angular_overlap(p, q, cam):
    bp = math.atan2(p[1] - cam[1], p[0] - cam[0])
    bq = math.atan2(q[1] - cam[1], q[0] - cam[0])
    hp = math.asin(RADIUS / math.hypot(p[0] - cam[0], p[1] - cam[1]))
    hq = math.asin(RADIUS / math.hypot(q[0] - cam[0], q[1] - cam[1]))
    return abs(bp - bq) < hp + hq + math.radians(1)


def occluder_for(member, other, cam):
    """Pedestrian nearer to the camera whose angular interval ends exactly at
    the member's center bearing, hiding half of it."""
    d_m, _ = rel_view(member, cam)
    bearing_m = math.atan2(member[1] - cam[1], member[0] - cam[0])
    for d_o in (d_m - 2.2, d_m - 2.0, d_m - 2.4):
        if d_o < 1.0:
            continue
        half = math.asin(RADIUS / d_o)
        for side in (-1.0, 1.0):
            b = bearing_m + side * half
            occ = (cam[0] + d_o * math.cos(b), cam[1] + d_o * math.sin(b))
            if not (far_from(occ, member, THRESHOLD + 0.1) and far_from(occ, other, THRESHOLD + 0.1)):
                continue
            if not in_bounds(occ) or angular_overlap(occ, other, cam):
                continue
            return occ
    raise RuntimeError("no occluder position for %r" % (member,))


def fmt_pt(p):
    # Occluders keep 12 decimals: their half-cover has to survive printing.
    if p != rounded(p):
        return "[%.12f, %.12f]" % p
    return "[%.4f, %.4f]" % p


def rounded(p):
    return (round(p[0], 4), round(p[1], 4))


def pedestrian_lines(peds, indent):
    pad = " " * indent
    lines = []
    for pid, pos in peds:
        lines.append("%s- {id: %d, start: %s, radius_m: %.1f}" % (pad, pid, fmt_pt(pos), RADIUS))
    return lines


def header(case, patrol, robot, duration):
    x, y, h = robot
    return f"""# Detection sweep, case {case}. Generated by generate_table1.py; edit that script instead.
experiment: table1 case {case}
kind: monitor
duration_s: {duration}
seed: {SEED + case}

world:
  dt_s: 0.1
  bounds_min: [0, 0]
  bounds_max: [{BOUNDS[0]:g}, {BOUNDS[1]:g}]

robot:
  start: [{x:g}, {y:g}]
  heading_deg: {h:g}
  patrol: {patrol}

cameras:
  rgbd:
    fov_deg: 70
    range_m: {RANGE:g}
    width_px: 320
    height_px: 240
  cctv:
    image_corners_px: [[360, 1000], [1560, 1000], [1260, 300], [660, 300]]
    rect_width_m: {FOOTPRINT[0]:g}
    rect_height_m: {FOOTPRINT[1]:g}
    pixels_per_meter: 100
    eye: [{CCTV_EYE[0]:g}, {CCTV_EYE[1]:g}]
    eye_height_m: 4
  lidar:
    beams: 241
    fov_deg: 240
    max_range_m: 10
"""


def write_case(case, patrol, robot, trials, trial_duration):
    lines = [header(case, patrol, robot, trial_duration).rstrip("\n"), "", "sweep:",
             "  configurations: [cctv_only, robot_only, hybrid]",
             f"  trial_duration_s: {trial_duration:g}", "  trials:"]
    for i, (label, peds) in enumerate(trials):
        lines.append(f"    # {i}: {label}")
        lines.append("    - pedestrians:")
        lines.extend(pedestrian_lines(peds, 8))
    path = OUT / f"table1_case{case}.scn"
    path.write_text("\n".join(lines) + "\n")
    print("wrote", path)


def pair_trial(members, first_id=1):
    return [(first_id, rounded(members[0])), (first_id + 1, rounded(members[1]))]


def main():
    rng = random.Random(SEED)
    inside = sample_inside(rng, 20)
    in_fov = sample_outside_in_fov(rng, 10)
    hidden = sample_outside_hidden(rng, 10)
    lawn = sample_outside_lawn(rng, 20)

    static_trials = [("inside footprint", pair_trial(m)) for m in inside]
    static_trials += [("outside, in robot view", pair_trial(m)) for m in in_fov]
    static_trials += [("outside, out of robot view", pair_trial(m)) for m in hidden]
    write_case(1, "idle", STATIC_ROBOT, static_trials, 30)

    occluded = []
    for k, (label, peds) in enumerate(static_trials):
        if 20 <= k < 23:
            a, b = peds[0][1], peds[1][1]
            occ = occluder_for(b, a, STATIC_ROBOT)
            occluded.append(("outside, in robot view, half occluded", peds + [(3, occ)]))
        else:
            occluded.append((label, peds))
    write_case(2, "idle", STATIC_ROBOT, occluded, 30)

    lawn_trials = [("inside footprint", pair_trial(m)) for m in inside]
    lawn_trials += [("outside footprint", pair_trial(m)) for m in lawn]
    write_case(3, "lawnmower", LAWN_ROBOT, lawn_trials, 75)
    return 0


if __name__ == "__main__":
    sys.exit(main())
