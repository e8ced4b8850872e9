"""Control: proportional trajectory tracking plus the safety overrides."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..geometry import angle_diff
from ..messages import Node, Tree, leaf, node
from .planning import DECISION_STOP, PlanOut, EgoChassis

# Tracking gains, tuned once so the ego holds a straight lane well inside
# 0.2 m and reaches commanded speeds without overshoot at dt = 0.05 s.
KP_SPEED = 0.8
KP_BRAKE = 0.55
KP_LATERAL = 0.12
KP_HEADING = 0.9


@dataclass(frozen=True)
class ControlOut:
    steer: float
    throttle: float
    brake: float


def control(plan: Optional[PlanOut], ego: Optional[EgoChassis],
            pred_brake: Optional[float], cfg) -> ControlOut:
    if plan is None or ego is None or not plan.points:
        return ControlOut(0.0, 0.0, 0.0)

    max_speed_kmh = cfg.get("control", "MAX_SPEED")
    brake_cap = cfg.get("control", "brake_cap")
    steer_limit = cfg.get("control", "steer_limit")
    throttle_limit = cfg.get("control", "throttle_limit")
    stop_eps = cfg.get("control", "stop_speed_epsilon")
    deadband = cfg.get("control", "speed_deadband")
    brake_threshold = cfg.get("perception", "BRAKE_THRESHOLD")

    p0 = plan.points[0]
    target_speed = p0[2]

    # Longitudinal proportional control around the first plan point's speed.
    err = target_speed - ego.speed
    throttle = 0.0
    brake = 0.0
    if err > deadband:
        throttle = min(KP_SPEED * err, throttle_limit)
    elif err < -deadband:
        brake = min(KP_BRAKE * (-err), brake_cap)
    if target_speed < max(stop_eps, 0.05) and ego.speed < max(stop_eps, 0.1):
        throttle, brake = 0.0, max(brake, 0.3)  # hold at the stop fence

    # Lateral: signed offset from the planned path plus heading alignment.
    if len(plan.points) > 1:
        p1 = plan.points[1]
        px, py = p1[0] - p0[0], p1[1] - p0[1]
    else:
        px, py = math.cos(ego.heading), math.sin(ego.heading)
    norm = math.hypot(px, py)
    if norm < 1e-9:
        path_heading = ego.heading
        lateral = 0.0
    else:
        path_heading = math.atan2(py, px)
        # Positive when the ego sits left of the path (direction x offset).
        lateral = ((ego.y - p0[1]) * px - (ego.x - p0[0]) * py) / norm
    heading_err = angle_diff(ego.heading, path_heading)
    steer = -KP_LATERAL * lateral - KP_HEADING * heading_err
    steer = max(-steer_limit, min(steer_limit, steer))

    # Overrides, in priority order (strict > on the brake threshold).
    if pred_brake is not None and pred_brake > brake_threshold:
        throttle, brake = 0.0, 1.0
    elif plan.decision == DECISION_STOP:
        throttle, brake = 0.0, 1.0
    if ego.speed * 3.6 > max_speed_kmh:
        throttle = 0.0

    return ControlOut(
        steer=max(-1.0, min(1.0, steer)),
        throttle=max(0.0, min(1.0, throttle)),
        brake=max(0.0, min(1.0, brake)),
    )


def control_to_tree(out: ControlOut) -> Tree:
    return node(("steer", leaf(out.steer)),
                ("throttle", leaf(out.throttle)),
                ("brake", leaf(out.brake)))


def control_from_tree(tree: Tree) -> ControlOut:
    assert isinstance(tree, Node)
    return ControlOut(
        steer=float(tree.child("steer").value),
        throttle=float(tree.child("throttle").value),
        brake=float(tree.child("brake").value),
    )


def chassis_to_tree(ego: EgoChassis) -> Tree:
    return node(("x", leaf(ego.x)), ("y", leaf(ego.y)),
                ("heading", leaf(ego.heading)), ("speed", leaf(ego.speed)))


def chassis_from_tree(tree: Tree) -> EgoChassis:
    assert isinstance(tree, Node)
    return EgoChassis(
        x=float(tree.child("x").value), y=float(tree.child("y").value),
        heading=float(tree.child("heading").value),
        speed=float(tree.child("speed").value),
    )
