"""Perception: turns ground-truth world state into obstacle and brake messages.

The deep-learning stages of real perception are replaced by a deterministic
surrogate: the braking-probability signal is a table lookup on the scene
(red light ahead, red-truck-in-cone, clear road) instead of a model forward
pass, which keeps replay bit-exact while preserving the decision-level
behavior those models feed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from ..geometry import Polyline, angle_diff
from ..messages import Leaf, Node, Tree, leaf, list_node, node

# Surrogate constants (stand-ins for model weights, not configuration).
PRED_BRAKE_RED_LIGHT = 0.9
PRED_BRAKE_RED_TRUCK = 0.2
RED_TRUCK_CONE_DEG = 15.0
RED_TRUCK_SUBTEND_DEG = 5.0
RED_LIGHT_LATERAL_M = 5.0


@dataclass(frozen=True)
class SensedEntity:
    """Ground-truth entity handed to the sensor front end.

    `heading` is the body orientation; `motion_heading` is the direction of
    travel. They differ when a vehicle's body is not aligned with its path
    (drift on wet ground).
    """
    id: str
    kind: str
    color: str
    x: float
    y: float
    heading: float
    speed: float
    half_length: float
    half_width: float
    is_actor: bool
    motion_heading: Optional[float] = None
    light_policy: Optional[str] = None


@dataclass(frozen=True)
class EgoPose:
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class PerceivedObstacle:
    """Tracked obstacle: pose, bounding box, and velocity estimate.

    The tracker estimates the direction of travel (`motion_heading`)
    independently of the body orientation (`heading`), as position-history
    trackers do.
    """
    id: str
    x: float
    y: float
    heading: float
    motion_heading: float
    speed: float
    half_length: float
    half_width: float
    visible_fraction: float


@dataclass(frozen=True)
class PerceptionOut:
    obstacles: tuple[PerceivedObstacle, ...]
    pred_brake: float


def perceive(ego: EgoPose, entities: list[SensedEntity], route: Polyline,
             visible_fraction: Callable[[SensedEntity], float],
             cfg) -> PerceptionOut:
    """One perception tick. Only entities with visible fraction > 0 appear."""
    sensor_range = cfg.get("perception", "sensor_range") - cfg.get("perception", "range_margin_m")
    half_fov = math.radians(cfg.get("perception", "fov_deg")) / 2.0
    min_fraction = cfg.get("perception", "min_visible_fraction")
    attenuation = cfg.get("perception", "speed_filter_alpha")
    min_speed_report = cfg.get("perception", "min_obstacle_speed_report")
    max_tracked = int(round(cfg.get("perception", "max_tracked_obstacles")))

    seen: list[tuple[float, SensedEntity, float]] = []
    pred_brake = cfg.get("perception", "brake_signal_floor")
    saw_red_light = False
    saw_red_truck = False
    s_ego, _ = route.project(ego.x, ego.y)

    for ent in entities:
        dx, dy = ent.x - ego.x, ent.y - ego.y
        dist = math.hypot(dx, dy)
        if dist > sensor_range:
            continue
        bearing = angle_diff(math.atan2(dy, dx), ego.heading)
        if abs(bearing) > half_fov:
            continue
        fraction = visible_fraction(ent)
        if fraction <= max(0.0, min_fraction):
            continue
        seen.append((dist, ent, fraction))

        if ent.kind == "traffic_light" and ent.light_policy == "red":
            s_ent, lat_ent = route.project(ent.x, ent.y)
            if 0.0 < s_ent - s_ego <= sensor_range and abs(lat_ent) <= RED_LIGHT_LATERAL_M:
                saw_red_light = True
        if ent.is_actor and ent.kind == "truck" and ent.color == "red":
            if abs(bearing) <= math.radians(RED_TRUCK_CONE_DEG):
                # Apparent size of the (head-on) cross-section in the frame.
                subtend = 2.0 * math.asin(min(1.0, ent.half_width / max(dist, 1e-6)))
                if subtend > math.radians(RED_TRUCK_SUBTEND_DEG):
                    saw_red_truck = True

    if saw_red_light:
        pred_brake = PRED_BRAKE_RED_LIGHT
    elif saw_red_truck:
        pred_brake = PRED_BRAKE_RED_TRUCK

    seen.sort(key=lambda item: item[0])
    kept = seen[:max_tracked]
    kept.sort(key=lambda item: item[1].id)

    obstacles = []
    for _, ent, fraction in kept:
        est = ent.speed * (1.0 - attenuation)
        if est < min_speed_report:
            est = 0.0
        motion = ent.motion_heading if ent.motion_heading is not None else ent.heading
        obstacles.append(PerceivedObstacle(
            id=ent.id, x=ent.x, y=ent.y, heading=ent.heading,
            motion_heading=motion, speed=est,
            half_length=ent.half_length, half_width=ent.half_width,
            visible_fraction=fraction,
        ))
    return PerceptionOut(obstacles=tuple(obstacles), pred_brake=pred_brake)


def obstacles_to_tree(out: PerceptionOut) -> Tree:
    items = [node(
        ("id", leaf(o.id)),
        ("x", leaf(o.x)),
        ("y", leaf(o.y)),
        ("heading", leaf(o.heading)),
        ("motion_heading", leaf(o.motion_heading)),
        ("speed", leaf(o.speed)),
        ("half_length", leaf(o.half_length)),
        ("half_width", leaf(o.half_width)),
        ("visible", leaf(o.visible_fraction)),
    ) for o in out.obstacles]
    return node(("obstacles", list_node("o", items)))


def brake_to_tree(out: PerceptionOut) -> Tree:
    return leaf(out.pred_brake)


def obstacles_from_tree(tree: Tree) -> tuple[PerceivedObstacle, ...]:
    assert isinstance(tree, Node)
    obstacles = []
    for _, item in tree.child("obstacles").children:
        assert isinstance(item, Node)
        vals = {label: sub.value for label, sub in item.children if isinstance(sub, Leaf)}
        obstacles.append(PerceivedObstacle(
            id=str(vals["id"]), x=vals["x"], y=vals["y"], heading=vals["heading"],
            motion_heading=vals["motion_heading"], speed=vals["speed"],
            half_length=vals["half_length"], half_width=vals["half_width"],
            visible_fraction=vals["visible"],
        ))
    return tuple(obstacles)


def brake_from_tree(tree: Tree) -> float:
    assert isinstance(tree, Leaf)
    return float(tree.value)
