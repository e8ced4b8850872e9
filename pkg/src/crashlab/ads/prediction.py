"""Prediction: labels obstacles static or moving and extrapolates trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..messages import Leaf, Node, Tree, leaf, list_node, node
from .perception import PerceivedObstacle

POINT_INTERVAL_S = 0.5


@dataclass(frozen=True)
class PredictedObstacle:
    id: str
    static: bool
    heading: float
    half_length: float
    half_width: float
    points: tuple[tuple[float, float], ...]  # at 0, 0.5s, ... over the horizon


def predict(obstacles: tuple[PerceivedObstacle, ...], cfg) -> tuple[PredictedObstacle, ...]:
    """Constant-position prediction for static obstacles, constant-velocity
    extrapolation for moving ones."""
    threshold = cfg.get("prediction", "still_obstacle_speed_threshold")
    horizon = cfg.get("prediction", "prediction_horizon_s")
    min_speed = cfg.get("prediction", "min_prediction_speed")
    cap = int(round(cfg.get("prediction", "max_prediction_obstacles")))

    steps = max(1, int(round(horizon / POINT_INTERVAL_S)))
    out = []
    for obs in obstacles[:cap]:
        static = obs.speed < threshold
        speed = 0.0 if (static or obs.speed < min_speed) else obs.speed
        # Extrapolation follows the tracked direction of travel; the body
        # orientation rides along for consumers that want it.
        vx = speed * math.cos(obs.motion_heading)
        vy = speed * math.sin(obs.motion_heading)
        points = tuple((obs.x + vx * (i * POINT_INTERVAL_S),
                        obs.y + vy * (i * POINT_INTERVAL_S))
                       for i in range(steps + 1))
        out.append(PredictedObstacle(
            id=obs.id, static=static, heading=obs.heading,
            half_length=obs.half_length, half_width=obs.half_width,
            points=points,
        ))
    return tuple(out)


def prediction_to_tree(predicted: tuple[PredictedObstacle, ...]) -> Tree:
    items = []
    for p in predicted:
        pts = [node(("x", leaf(x)), ("y", leaf(y))) for x, y in p.points]
        items.append(node(
            ("id", leaf(p.id)),
            ("static", leaf(p.static)),
            ("heading", leaf(p.heading)),
            ("half_length", leaf(p.half_length)),
            ("half_width", leaf(p.half_width)),
            ("points", list_node("p", pts)),
        ))
    return node(("obstacles", list_node("o", items)))


def prediction_from_tree(tree: Tree) -> tuple[PredictedObstacle, ...]:
    assert isinstance(tree, Node)
    out = []
    for _, item in tree.child("obstacles").children:
        assert isinstance(item, Node)
        scalars = {label: sub.value for label, sub in item.children if isinstance(sub, Leaf)}
        points = []
        for _, pt in item.child("points").children:
            assert isinstance(pt, Node)
            points.append((pt.child("x").value, pt.child("y").value))
        out.append(PredictedObstacle(
            id=str(scalars["id"]), static=bool(scalars["static"]),
            heading=scalars["heading"], half_length=scalars["half_length"],
            half_width=scalars["half_width"], points=tuple(points),
        ))
    return tuple(out)
