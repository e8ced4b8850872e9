"""Deterministic fixed-step 2D world with the modular ego driver in the loop.

One tick: the simulator publishes the chassis message, every ADS module
publishes from the *previous* tick's messages (a one-tick pipeline, so cause
precedes effect on the bus), the ego integrates the fresh control command,
and scripted actors advance along their schedules. Identical inputs produce
bit-identical trajectories, messages, and verdicts; the run stops at the
first accident or at the horizon.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

from .ads import control as control_mod
from .ads import perception as perception_mod
from .ads import planning as planning_mod
from .ads import prediction as prediction_mod
from .ads.control import ControlOut, EgoChassis, chassis_to_tree, control_to_tree
from .ads.graph import (CH_BRAKE, CH_CHASSIS, CH_CONTROL, CH_OBSTACLES,
                        CH_PLANNING, CH_PREDICTION)
from .ads.perception import EgoPose, SensedEntity
from .geometry import Polyline, angle_diff, lerp_angle, obb_overlap, segment_intersects_obb, wrap_angle
from .messages import ChannelMessage
from .recording import (AccidentVerdict, ExecutionRecord, RecordMeta,
                        TrajectorySample)
from .scenario import (ActorState, CyberConfiguration, PhysicalCondition,
                       ScenarioError, validate)

# Ego actuation limits (vehicle plant, not ADS configuration).
ACCEL_MAX = 3.0        # m/s^2 at full throttle
BRAKE_MAX = 8.0        # m/s^2 at full brake
YAW_GAIN = 1.2         # rad/s per unit steer

# Accident thresholds. The braking pair realizes "emergency braking" as
# sustained deceleration; the values are artifact constants.
EB_DECEL = 6.0         # m/s^2
EB_WINDOW = 0.5        # s
EB_MIN_SPEED = 1.0     # m/s at window start

VISIBILITY_BASE_RANGE = 200.0
VISIBILITY_SAMPLES = 12
DRIFT_PRECIPITATION = 50.0


@dataclass(frozen=True)
class SimulationParams:
    dt: float = 0.05
    horizon: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        steps = self.horizon / self.dt
        if self.horizon <= 0.0 or abs(steps - round(steps)) > 1e-9:
            raise ValueError("horizon must be a positive multiple of dt")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class ExecutionResult:
    trajectories: dict[str, tuple[TrajectorySample, ...]]
    verdict: AccidentVerdict
    record: ExecutionRecord


def detect_collision(a: ActorState, b: ActorState) -> bool:
    """Oriented-rectangle overlap via the separating-axis test."""
    return obb_overlap(a.x, a.y, a.heading, a.half_length, a.half_width,
                       b.x, b.y, b.heading, b.half_length, b.half_width)


def detect_emergency_brake(samples, threshold_decel: float = EB_DECEL,
                           window: float = EB_WINDOW) -> Optional[float]:
    """Earliest time where mean deceleration over `window` exceeds the
    threshold while the window started above walking speed."""
    if len(samples) < 2:
        return None
    dt = samples[1].t - samples[0].t
    k = max(1, int(round(window / dt)))
    for i in range(k, len(samples)):
        if _eb_violation(samples, i, k, dt, threshold_decel):
            return samples[i].t
    return None


def _eb_violation(samples, i: int, k: int, dt: float, threshold_decel: float) -> bool:
    v0, v1 = samples[i - k].speed, samples[i].speed
    return v0 > EB_MIN_SPEED and (v0 - v1) / (k * dt) > threshold_decel


def visibility_query(viewer: tuple[float, float],
                     target_box: tuple[float, float, float, float, float],
                     occluder_boxes, fog_density: float = 0.0,
                     base_range: float = VISIBILITY_BASE_RANGE,
                     samples: int = VISIBILITY_SAMPLES) -> float:
    """Fraction of the target's boundary visible from the viewer point.

    Fog shortens the visible range linearly; disabled entities must be
    excluded from `occluder_boxes` by the caller.
    """
    vx, vy = viewer
    tx, ty, th, thl, thw = target_box
    visible_range = base_range * (1.0 - fog_density / 100.0)
    if math.hypot(tx - vx, ty - vy) > visible_range:
        return 0.0
    # Only occluders near the sight line can block; cull the rest once.
    target_radius = math.hypot(thl, thw)
    candidates = []
    for box in occluder_boxes:
        ox, oy, _, ohl, ohw = box
        reach = math.hypot(ohl, ohw) + target_radius
        if _point_segment_dist(ox, oy, vx, vy, tx, ty) <= reach:
            candidates.append(box)
    if not candidates:
        return 1.0
    pts = _boundary_points(tx, ty, th, thl, thw, samples)
    clear = 0
    for px, py in pts:
        blocked = False
        for ox, oy, oh, ohl, ohw in candidates:
            if segment_intersects_obb(vx, vy, px, py, ox, oy, oh, ohl, ohw):
                blocked = True
                break
        if not blocked:
            clear += 1
    return clear / len(pts)


def _point_segment_dist(px, py, ax, ay, bx, by) -> float:
    ex, ey = bx - ax, by - ay
    len2 = ex * ex + ey * ey
    if len2 < 1e-12:
        return math.hypot(px - ax, py - ay)
    u = max(0.0, min(1.0, ((px - ax) * ex + (py - ay) * ey) / len2))
    return math.hypot(px - (ax + ex * u), py - (ay + ey * u))


def _boundary_points(x, y, heading, hl, hw, samples):
    corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
    per_edge = max(1, samples // 4)
    c, s = math.cos(heading), math.sin(heading)
    pts = []
    for i in range(4):
        ax, ay = corners[i]
        bx, by = corners[(i + 1) % 4]
        for j in range(per_edge):
            u = j / per_edge
            lx, ly = ax + (bx - ax) * u, ay + (by - ay) * u
            pts.append((x + lx * c - ly * s, y + lx * s + ly * c))
    return pts


class _Motion:
    """Deterministic state source for one non-ego actor.

    A script describes the actor's nominal motion. The actor's declared
    initial state acts as the mutation surface: shifting the position
    translates the whole path, rotating the heading pivots it about the
    start, and scaling the speed re-times it proportionally. Without a
    script the actor just rolls at constant velocity.
    """

    def __init__(self, actor: ActorState, script, wet: bool):
        self.actor = actor
        self.wet = wet
        if script:
            self.ts = [p.t for p in script]
            self.xs = [p.x for p in script]
            self.ys = [p.y for p in script]
            self.hs = [p.heading for p in script]
            self.vs = [p.speed for p in script]
            base_speed = self.vs[0]
            self.rate = actor.speed / base_speed if base_speed > 1e-9 else 1.0
            self.rotation = angle_diff(actor.heading, self.hs[0])
            self.pivot = (self.xs[0], self.ys[0])
            self.shift = (actor.x - self.xs[0], actor.y - self.ys[0])
        else:
            self.ts = None

    def state_at(self, t: float) -> tuple[float, float, float, float, float]:
        """(x, y, body heading, speed, motion heading) at time t."""
        a = self.actor
        if self.ts is None:
            return (a.x + a.speed * t * math.cos(a.heading),
                    a.y + a.speed * t * math.sin(a.heading),
                    a.heading, a.speed, a.heading)
        tau = self.rate * t
        x, y, scripted_h, v, tangent = self._interp(tau)
        motion = wrap_angle(tangent + self.rotation)
        heading = wrap_angle(scripted_h + self.rotation) if self.wet else motion
        cx, cy = self.pivot
        cr, sr = math.cos(self.rotation), math.sin(self.rotation)
        rx, ry = x - cx, y - cy
        return (cx + cr * rx - sr * ry + self.shift[0],
                cy + sr * rx + cr * ry + self.shift[1],
                heading, v * self.rate, motion)

    def _interp(self, tau: float):
        ts, xs, ys, hs, vs = self.ts, self.xs, self.ys, self.hs, self.vs
        if tau <= ts[0]:
            return xs[0], ys[0], hs[0], vs[0], self._tangent(0, hs[0])
        if tau >= ts[-1]:
            # Hold the last waypoint once the schedule runs out; at the exact
            # endpoint the scheduled speed still applies (replay exactness).
            v_end = vs[-1] if tau <= ts[-1] + 1e-9 else 0.0
            return xs[-1], ys[-1], hs[-1], v_end, self._tangent(len(ts) - 2, hs[-1])
        i = bisect_right(ts, tau)
        u = (tau - ts[i - 1]) / (ts[i] - ts[i - 1])
        x = xs[i - 1] + (xs[i] - xs[i - 1]) * u
        y = ys[i - 1] + (ys[i] - ys[i - 1]) * u
        h = lerp_angle(hs[i - 1], hs[i], u)
        v = vs[i - 1] + (vs[i] - vs[i - 1]) * u
        return x, y, h, v, self._tangent(i - 1, h)

    def _tangent(self, seg: int, fallback: float) -> float:
        seg = max(0, min(seg, len(self.ts) - 2))
        dx = self.xs[seg + 1] - self.xs[seg]
        dy = self.ys[seg + 1] - self.ys[seg]
        if dx * dx + dy * dy < 1e-12:
            return fallback
        return wrap_angle(math.atan2(dy, dx))


def run_execution(cfg: CyberConfiguration, condition: PhysicalCondition,
                  params: SimulationParams, scenario_id: str = "") -> ExecutionResult:
    problems = validate(condition)
    if problems:
        detail = "; ".join(f"{p}: {m}" for p, m in problems)
        raise ScenarioError(f"condition does not validate: {detail}")

    dt = params.dt
    route = Polyline(list(condition.map.route))
    ego0 = condition.ego
    wet = condition.weather.precipitation > DRIFT_PRECIPITATION
    fog = condition.weather.fog_density

    movers = {a.id: _Motion(a, condition.actor_scripts.get(a.id), wet)
              for a in condition.actors if a.kind != "ego"}
    actor_by_id = {a.id: a for a in condition.actors}

    ego_x, ego_y, ego_h, ego_v = ego0.x, ego0.y, ego0.heading, ego0.speed
    states: dict[str, tuple[float, float, float, float, float]] = {}

    trajectories: dict[str, list[TrajectorySample]] = {a.id: [] for a in condition.actors}
    channels: dict[str, list[ChannelMessage]] = {ch: [] for ch in (
        CH_OBSTACLES, CH_BRAKE, CH_PREDICTION, CH_PLANNING, CH_CONTROL, CH_CHASSIS)}

    def snapshot(t: float):
        states.clear()
        states[ego0.id] = (ego_x, ego_y, ego_h, ego_v, ego_h)
        for actor_id, motion in movers.items():
            states[actor_id] = motion.state_at(t)
        for actor_id, (x, y, h, v, _) in states.items():
            trajectories[actor_id].append(TrajectorySample(t, x, y, h, v))

    snapshot(0.0)

    enabled_entities = [e for e in condition.map_entities if e.enabled]
    entity_boxes = {e.id: (e.x, e.y, e.heading, *e.extent) for e in enabled_entities}

    prev: dict[str, object] = {CH_OBSTACLES: None, CH_BRAKE: None, CH_PREDICTION: None,
                               CH_PLANNING: None, CH_CHASSIS: None, CH_CONTROL: None}
    verdict = AccidentVerdict(kind="none")

    def publish(channel: str, t: float, seq: int, payload, tree):
        channels[channel].append(ChannelMessage(channel, t, seq, tree))
        return payload

    ego_samples = trajectories[ego0.id]
    k = 0
    while True:
        t = k * dt
        chassis = EgoChassis(ego_x, ego_y, ego_h, ego_v)

        sensed = []
        for actor_id, motion in movers.items():
            a = actor_by_id[actor_id]
            x, y, h, v, mh = states[actor_id]
            sensed.append(SensedEntity(
                id=a.id, kind=a.kind, color=a.color, x=x, y=y, heading=h,
                speed=v, half_length=a.half_length, half_width=a.half_width,
                is_actor=True, motion_heading=mh))
        for e in enabled_entities:
            hl, hw = e.extent
            sensed.append(SensedEntity(
                id=e.id, kind=e.kind, color="gray", x=e.x, y=e.y,
                heading=e.heading, speed=0.0, half_length=hl, half_width=hw,
                is_actor=False, light_policy=e.light_policy))
        sensed.sort(key=lambda ent: ent.id)

        def fraction_of(target: SensedEntity) -> float:
            occluders = []
            for other in sensed:
                if other.id == target.id:
                    continue
                occluders.append((other.x, other.y, other.heading,
                                  other.half_length, other.half_width))
            return visibility_query((ego_x, ego_y),
                                    (target.x, target.y, target.heading,
                                     target.half_length, target.half_width),
                                    occluders, fog_density=fog)

        perception_out = perception_mod.perceive(
            EgoPose(ego_x, ego_y, ego_h, ego_v), sensed, route, fraction_of, cfg)
        predicted = prediction_mod.predict(
            prev[CH_OBSTACLES].obstacles if prev[CH_OBSTACLES] is not None else (), cfg)
        plan = planning_mod.plan(
            prev[CH_PREDICTION] if prev[CH_PREDICTION] is not None else (),
            prev[CH_CHASSIS], route, condition.map.lane_id,
            condition.map.lane_half_width, ego0.half_width, cfg) \
            if prev[CH_CHASSIS] is not None else None
        command = control_mod.control(prev[CH_PLANNING], prev[CH_CHASSIS],
                                      prev[CH_BRAKE], cfg)

        publish(CH_CHASSIS, t, k, chassis, chassis_to_tree(chassis))
        publish(CH_OBSTACLES, t, k, perception_out,
                perception_mod.obstacles_to_tree(perception_out))
        publish(CH_BRAKE, t, k, perception_out.pred_brake,
                perception_mod.brake_to_tree(perception_out))
        publish(CH_PREDICTION, t, k, predicted,
                prediction_mod.prediction_to_tree(predicted))
        if plan is not None:
            publish(CH_PLANNING, t, k, plan, planning_mod.plan_to_tree(plan))
        else:
            idle = planning_mod.PlanOut(condition.map.lane_id,
                                        planning_mod.DECISION_CRUISE, -1.0, ())
            plan = publish(CH_PLANNING, t, k, idle, planning_mod.plan_to_tree(idle))
        publish(CH_CONTROL, t, k, command, control_to_tree(command))

        prev[CH_CHASSIS] = chassis
        prev[CH_OBSTACLES] = perception_out
        prev[CH_BRAKE] = perception_out.pred_brake
        prev[CH_PREDICTION] = predicted
        prev[CH_PLANNING] = plan
        prev[CH_CONTROL] = command

        if k >= params.steps:
            break

        # Integrate the ego with this tick's command, then advance the world.
        accel = command.throttle * ACCEL_MAX - command.brake * BRAKE_MAX
        ego_v = max(0.0, ego_v + accel * dt)
        ego_x += ego_v * dt * math.cos(ego_h)
        ego_y += ego_v * dt * math.sin(ego_h)
        if ego_v > 1e-9:
            ego_h = wrap_angle(ego_h + command.steer * YAW_GAIN * dt)
        k += 1
        snapshot(k * dt)

        verdict = _check_accident(k * dt, condition, actor_by_id, states,
                                  entity_boxes, ego_samples, ego0.id, dt)
        if verdict.is_accident:
            break

    result_trajectories = {a: tuple(s) for a, s in trajectories.items()}
    meta = RecordMeta(
        scenario_id=scenario_id, seed=params.seed, dt=dt, horizon=params.horizon,
        config=tuple(cfg.items()), condition=condition)
    record = ExecutionRecord(
        meta=meta,
        channels={ch: tuple(msgs) for ch, msgs in channels.items()},
        trajectories=result_trajectories,
        verdict=verdict)
    return ExecutionResult(trajectories=result_trajectories, verdict=verdict,
                           record=record)


def _check_accident(t, condition, actor_by_id, states, entity_boxes,
                    ego_samples, ego_id, dt) -> AccidentVerdict:
    ids = [a.id for a in condition.actors]
    posed = {}
    for actor_id in ids:
        a = actor_by_id[actor_id]
        x, y, h, _, _ = states[actor_id]
        posed[actor_id] = (x, y, h, a.half_length, a.half_width)
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if obb_overlap(*posed[ids[i]], *posed[ids[j]]):
                return AccidentVerdict(kind="collision", time=t,
                                       participants=(ids[i], ids[j]))
    ego_box = posed[ego_id]
    for entity_id, box in entity_boxes.items():
        if obb_overlap(*ego_box, *box):
            return AccidentVerdict(kind="collision", time=t,
                                   participants=(ego_id, entity_id))
    # Only the newest window can fire: earlier ones were checked last tick.
    k = max(1, int(round(EB_WINDOW / dt)))
    i = len(ego_samples) - 1
    if i >= k and _eb_violation(ego_samples, i, k, dt, EB_DECEL):
        return AccidentVerdict(kind="emergency_braking", time=ego_samples[i].t,
                               participants=(ego_id,))
    return AccidentVerdict(kind="none")
