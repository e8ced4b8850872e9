"""Planning: corridor conflict checks and a speed profile along the route.

Obstacle boxes are swept along their predicted trajectories and tested for
overlap with the ego's lane corridor. The box orientation at each predicted
point is taken from the local tangent of the predicted path; the obstacle's
reported heading is only used when the path is degenerate (static). Lateral
inflation of the boxes is the sum of the two configured buffers, so those
buffers are the only guard when the tangent underestimates the true
footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import Polyline, obb_corners
from ..messages import Leaf, Node, Tree, leaf, list_node, node
from .prediction import POINT_INTERVAL_S, PredictedObstacle

PLAN_POINTS = 10
PLAN_POINT_DT = 0.3
LOOKAHEAD_M = 45.0
MIN_STOP_GAP_M = 0.3
IMMINENT_STOP_M = 2.0
ARRIVAL_GAP_M = 1.0     # within this gap a slow ego is "arriving" at a fence
ARRIVAL_SPEED = 2.5
HOLD_SPEED = 2.0

DECISION_CRUISE = "cruise"
DECISION_YIELD = "yield"
DECISION_OVERTAKE = "overtake"
DECISION_STOP = "stop"


@dataclass(frozen=True)
class PlanOut:
    lane_id: str
    decision: str
    stop_s: float  # route arclength of the stop fence, -1.0 when none
    points: tuple[tuple[float, float, float], ...]  # (x, y, target speed)


@dataclass(frozen=True)
class EgoChassis:
    x: float
    y: float
    heading: float
    speed: float


def _segment_heading(points, i, fallback):
    if i + 1 < len(points):
        a, b = points[i], points[i + 1]
    elif i > 0:
        a, b = points[i - 1], points[i]
    else:
        return fallback
    dx, dy = b[0] - a[0], b[1] - a[1]
    if dx * dx + dy * dy < 1e-12:
        return fallback
    return math.atan2(dy, dx)


def plan(predicted: tuple[PredictedObstacle, ...], ego: EgoChassis,
         route: Polyline, lane_id: str, lane_half_width: float,
         ego_half_width: float, cfg) -> PlanOut:
    yield_distance = cfg.get("planning", "yield_distance")
    lat_buffer = cfg.get("planning", "obstacle_lat_buffer")
    safety_buffer = cfg.get("planning", "kADCSafetyLBuffer")
    min_overtake_dist = cfg.get("planning", "kMinOvertakeDistance")
    overtake_time_buffer = cfg.get("planning", "kOvertakeTimeBuffer")
    cruise = cfg.get("planning", "cruise_speed_mps")
    decel_limit = cfg.get("planning", "planning_decel_limit")

    s_ego, _ = route.project(ego.x, ego.y)
    inflation = lat_buffer + safety_buffer
    lat_limit = ego_half_width + inflation

    conflicts = []  # (conflict_s, t_obs)
    for obs in predicted:
        hit = None
        for i, (px, py) in enumerate(obs.points):
            heading = _segment_heading(obs.points, i, obs.heading)
            corners = obb_corners(px, py, heading, obs.half_length, obs.half_width)
            s_lo = s_hi = None
            lat_lo = lat_hi = None
            for cx, cy in corners:
                s, lat = route.project(cx, cy)
                s_lo = s if s_lo is None else min(s_lo, s)
                s_hi = s if s_hi is None else max(s_hi, s)
                lat_lo = lat if lat_lo is None else min(lat_lo, lat)
                lat_hi = lat if lat_hi is None else max(lat_hi, lat)
            ahead = s_hi >= s_ego + MIN_STOP_GAP_M and s_lo <= s_ego + LOOKAHEAD_M
            lateral = lat_lo <= lat_limit and lat_hi >= -lat_limit
            if ahead and lateral:
                hit = (max(s_lo, s_ego), i * POINT_INTERVAL_S)
                break
        if hit is not None:
            conflicts.append(hit)

    decision = DECISION_CRUISE
    stop_s = -1.0
    if conflicts:
        decision = DECISION_OVERTAKE
        fences = []
        for conflict_s, t_obs in conflicts:
            dist = conflict_s - s_ego
            t_ego = dist / max(ego.speed, 0.1)
            if t_obs - t_ego > overtake_time_buffer and dist > min_overtake_dist:
                continue  # ego clears the conflict with margin; pass ahead
            fence = conflict_s - yield_distance
            gap = fence - s_ego
            if gap < MIN_STOP_GAP_M:
                if ego.speed < HOLD_SPEED:
                    fences.append(min(fence, s_ego))  # hold an achieved stop
                elif dist < IMMINENT_STOP_M:
                    decision = DECISION_STOP
                continue  # fence unreachable at speed: no stopping plan
            if gap < ARRIVAL_GAP_M and ego.speed < ARRIVAL_SPEED:
                fences.append(fence)  # arriving; tracking lag is not a reason
                continue              # to abandon an almost-achieved stop
            if ego.speed * ego.speed / (2.0 * gap) > decel_limit:
                continue  # cannot reach the fence within the decel limit
            fences.append(fence)
        if fences:
            decision = DECISION_YIELD
            stop_s = min(fences)

    # The profile brakes at half the feasibility limit so a fence accepted
    # above stays comfortably reachable while the controller tracks it.
    profile_decel = 0.5 * decel_limit
    points = []
    s = s_ego
    v = _profile_speed(s, cruise, stop_s, profile_decel)
    for _ in range(PLAN_POINTS):
        x, y = route.point_at(s)
        points.append((x, y, v))
        s = s + max(v, 0.0) * PLAN_POINT_DT
        v = _profile_speed(s, cruise, stop_s, profile_decel)
    return PlanOut(lane_id=lane_id, decision=decision, stop_s=stop_s,
                   points=tuple(points))


def _profile_speed(s: float, cruise: float, stop_s: float, decel: float) -> float:
    if stop_s < 0.0:
        return cruise
    gap = stop_s - s
    if gap <= 0.0:
        return 0.0
    return min(cruise, math.sqrt(2.0 * decel * gap))


def plan_to_tree(out: PlanOut) -> Tree:
    pts = [node(("x", leaf(x)), ("y", leaf(y)), ("v", leaf(v)))
           for x, y, v in out.points]
    return node(
        ("lane_id", leaf(out.lane_id)),
        ("decision", leaf(out.decision)),
        ("stop_s", leaf(out.stop_s)),
        ("traj", list_node("p", pts)),
    )


def plan_from_tree(tree: Tree) -> PlanOut:
    assert isinstance(tree, Node)
    points = []
    for _, pt in tree.child("traj").children:
        assert isinstance(pt, Node)
        points.append((pt.child("x").value, pt.child("y").value, pt.child("v").value))
    return PlanOut(
        lane_id=str(tree.child("lane_id").value),
        decision=str(tree.child("decision").value),
        stop_s=float(tree.child("stop_s").value),
        points=tuple(points),
    )
