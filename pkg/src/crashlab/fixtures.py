"""Seeded accident scenarios with known root causes.

Each fixture couples a scenario with the configuration parameter whose
default value provably causes the accident, plus a documented value that
provably suppresses it. The four cover the pipeline's target failure modes:

  s1_creeping_car    - a slowly moving car labeled static by prediction
                       creeps into the lane (still_obstacle_speed_threshold)
  s2_left_turner     - an oncoming left-turner; the yield fence lands too
                       close to stop, so the planner refuses to yield
                       (yield_distance)
  s3_red_truck       - a roadside red truck reads as a red light and trips
                       the hazard-stop override (BRAKE_THRESHOLD)
  s4_drifting_truck  - a truck drifting on wet ground; its predicted box is
                       oriented along the path tangent and misses the lane
                       (kADCSafetyLBuffer)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import wrap_angle
from .scenario import (ActorState, MapSpec, PhysicalCondition, ScenarioFile,
                       ScriptPoint, WeatherState)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScenarioFixture:
    scenario: ScenarioFile
    expected_verdict: str             # collision | emergency_braking
    trigger_entity: str               # ground-truth triggering entity id
    seeded_module: str
    seeded_parameter: str
    seeded_value: float               # accident-causing value (the default)
    fix_value: float                  # documented suppressing value

    @property
    def scenario_id(self) -> str:
        return self.scenario.scenario_id

    @property
    def seeded_key(self) -> str:
        return f"{self.seeded_module}.{self.seeded_parameter}"


def _ego(speed: float) -> ActorState:
    return ActorState(id="ego", kind="ego", color="blue", x=0.0, y=0.0,
                      heading=0.0, speed=speed, half_length=2.25, half_width=0.9)


def _route(length: float = 400.0) -> MapSpec:
    return MapSpec(route=((0.0, 0.0), (length, 0.0)))


def _script_from_path(points, speeds, times, drift: float = 0.0):
    """Waypoints with headings along the local tangent plus a drift offset."""
    script = []
    for i, ((x, y), v, t) in enumerate(zip(points, speeds, times)):
        if i + 1 < len(points):
            nx, ny = points[i + 1]
            px, py = points[i]
        else:
            nx, ny = points[i]
            px, py = points[i - 1]
        tangent = math.atan2(ny - py, nx - px)
        script.append(ScriptPoint(t=t, x=x, y=y,
                                  heading=wrap_angle(tangent + drift), speed=v))
    return tuple(script)


def s1_creeping_car() -> ScenarioFixture:
    """A sedan creeps from the right shoulder into the lane at 0.98 m/s.

    Below the 0.99 m/s still-obstacle threshold it is labeled static, so its
    constant-position prediction never enters the lane corridor and the ego
    only reacts when the body itself blocks the lane: too late to stop.
    """
    cruise = 8.0
    car_x = 34.0
    y0 = -6.34
    # Creep slowly, then pick up toward crossing speed; the speed profile
    # stays strictly below the threshold for the whole run.
    times, ys, speeds = [], [], []
    t, y = 0.0, y0
    profile = [(0.0, 0.55), (0.8, 0.55), (1.8, 0.98), (14.0, 0.98)]
    step = 0.2
    while t <= 14.0:
        v = _interp_profile(profile, t)
        times.append(t)
        ys.append(y)
        speeds.append(v)
        y += v * step
        t = round(t + step, 6)
    points = [(car_x, yy) for yy in ys]
    script = _script_from_path(points, speeds, times)
    car = ActorState(id="creeper", kind="sedan", color="white", x=car_x, y=y0,
                     heading=script[0].heading, speed=script[0].speed,
                     half_length=2.25, half_width=0.9)
    cond = PhysicalCondition(
        map=_route(), actors=(_ego(cruise), car),
        actor_scripts={"creeper": script})
    scenario = ScenarioFile(
        scenario_id="s1_creeping_car", condition=cond,
        ego_config_overrides={"planning.cruise_speed_mps": cruise},
        sim={"dt": 0.05, "horizon": 14.0, "seed": 101})
    return ScenarioFixture(
        scenario=scenario, expected_verdict="collision",
        trigger_entity="creeper", seeded_module="prediction",
        seeded_parameter="still_obstacle_speed_threshold",
        seeded_value=0.99, fix_value=0.50)


def _interp_profile(profile, t):
    for (t0, v0), (t1, v1) in zip(profile, profile[1:]):
        if t0 <= t <= t1:
            u = 0.0 if t1 <= t0 else (t - t0) / (t1 - t0)
            return v0 + (v1 - v0) * u
    return profile[-1][1]


def s2_left_turner() -> ScenarioFixture:
    """An oncoming sedan turns left across the ego's lane at the junction.

    The turn is detected ~15 m out at 10 m/s; with the 5 m yield distance
    the stop fence is unreachable within the planner decel limit, so it
    plans to pass instead and meets the turner mid-lane.
    """
    cruise = 10.0
    approach_speed = 6.0
    arc_speed = 3.5
    start = (45.9, 3.5)
    arc_entry_x = 38.0
    radius = 4.5

    points, speeds, times = [], [], []
    # Westbound approach in the opposite lane.
    t = 0.0
    x, y = start
    approach_time = (x - arc_entry_x) / approach_speed
    step = 0.15
    while t < approach_time - 1e-9:
        points.append((x - approach_speed * t, y))
        speeds.append(approach_speed)
        times.append(round(t, 6))
        t += step
    # Quarter arc from heading west to heading south (left turn across).
    cx, cy = arc_entry_x, y - radius
    arc_len = math.pi / 2 * radius
    arc_time = arc_len / arc_speed
    n_arc = 14
    for i in range(n_arc + 1):
        u = i / n_arc
        points.append((cx - radius * math.sin(u * math.pi / 2),
                       cy + radius * math.cos(u * math.pi / 2)))
        speeds.append(arc_speed)
        times.append(round(approach_time + u * arc_time, 6))
    # Southbound exit.
    exit_x = cx - radius
    exit_y = cy
    t_exit = approach_time + arc_time
    for i in range(1, 30):
        times.append(round(t_exit + i * step, 6))
        points.append((exit_x, exit_y - arc_speed * i * step))
        speeds.append(arc_speed)
    script = _script_from_path(points, speeds, times)
    turner = ActorState(id="turner", kind="sedan", color="red", x=start[0],
                        y=start[1], heading=script[0].heading,
                        speed=script[0].speed, half_length=2.25, half_width=0.9)
    cond = PhysicalCondition(
        map=_route(), actors=(_ego(cruise), turner),
        actor_scripts={"turner": script})
    scenario = ScenarioFile(
        scenario_id="s2_left_turner", condition=cond,
        ego_config_overrides={"planning.cruise_speed_mps": cruise},
        sim={"dt": 0.05, "horizon": 12.0, "seed": 202})
    return ScenarioFixture(
        scenario=scenario, expected_verdict="collision",
        trigger_entity="turner", seeded_module="planning",
        seeded_parameter="yield_distance", seeded_value=5.0, fix_value=2.0)


def s3_red_truck() -> ScenarioFixture:
    """A red truck parked off the roadside ahead reads as a red light once
    it fills enough of the telephoto frame, tripping the hazard stop."""
    cruise = 8.0
    truck = ActorState(id="red_truck", kind="truck", color="red", x=55.8,
                       y=5.0, heading=0.0, speed=0.0,
                       half_length=4.0, half_width=1.25)
    cond = PhysicalCondition(map=_route(), actors=(_ego(cruise), truck))
    scenario = ScenarioFile(
        scenario_id="s3_red_truck", condition=cond,
        ego_config_overrides={"planning.cruise_speed_mps": cruise},
        sim={"dt": 0.05, "horizon": 10.0, "seed": 303})
    return ScenarioFixture(
        scenario=scenario, expected_verdict="emergency_braking",
        trigger_entity="red_truck", seeded_module="perception",
        seeded_parameter="BRAKE_THRESHOLD", seeded_value=0.10, fix_value=0.20)


def s4_drifting_truck() -> ScenarioFixture:
    """A truck ahead drifts on wet ground: its body juts into the lane while
    its predicted, path-tangent-oriented box stays clear."""
    cruise = 8.0
    truck_speed = 5.0
    drift = -0.55  # body rotated toward the ego lane
    path_y = 3.75
    times, points, speeds = [], [], []
    step = 0.25
    t, x = 0.0, 30.0
    while t <= 14.0:
        times.append(round(t, 6))
        points.append((x, path_y))
        speeds.append(truck_speed)
        x += truck_speed * step
        t += step
    script = _script_from_path(points, speeds, times, drift=drift)
    truck = ActorState(id="wet_truck", kind="truck", color="black", x=30.0,
                       y=path_y, heading=script[0].heading,
                       speed=script[0].speed, half_length=4.0, half_width=1.25)
    cond = PhysicalCondition(
        map=_route(), actors=(_ego(cruise), truck),
        actor_scripts={"wet_truck": script},
        weather=WeatherState(precipitation=80.0, cloudiness=60.0))
    scenario = ScenarioFile(
        scenario_id="s4_drifting_truck", condition=cond,
        ego_config_overrides={"planning.cruise_speed_mps": cruise},
        sim={"dt": 0.05, "horizon": 12.0, "seed": 404})
    return ScenarioFixture(
        scenario=scenario, expected_verdict="collision",
        trigger_entity="wet_truck", seeded_module="planning",
        seeded_parameter="kADCSafetyLBuffer", seeded_value=0.1, fix_value=1.0)


def scenario_library() -> tuple[ScenarioFixture, ...]:
    return (s1_creeping_car(), s2_left_turner(), s3_red_truck(),
            s4_drifting_truck())
