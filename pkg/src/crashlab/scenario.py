"""Domain model: environments, ADS configurations, and mutation deltas.

Everything here is an immutable value object. Mutations are expressed as
`Delta` records (path, old, new) applied with `apply_delta`, which returns a
new object and never touches the base.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional

from .geometry import TWO_PI, wrap_angle

ACTOR_KINDS = ("ego", "sedan", "truck", "cyclist", "pedestrian")
ACTOR_COLORS = ("red", "blue", "black", "white", "gray")
MAP_ENTITY_KINDS = ("traffic_cone", "box", "building", "vegetation", "traffic_light")
LIGHT_POLICIES = ("red", "yellow", "green")

# Footprints by kind (half-length, half-width), meters. Map entities have no
# extent field of their own; these defaults make them occludable rectangles.
ACTOR_EXTENTS = {
    "ego": (2.25, 0.9),
    "sedan": (2.25, 0.9),
    "truck": (4.0, 1.25),
    "cyclist": (0.9, 0.35),
    "pedestrian": (0.3, 0.3),
}
MAP_ENTITY_EXTENTS = {
    "traffic_cone": (0.2, 0.2),
    "box": (0.5, 0.5),
    "building": (6.0, 4.0),
    "vegetation": (1.5, 1.5),
    "traffic_light": (0.15, 0.15),
}

WEATHER_RANGES = {
    "cloudiness": (0.0, 100.0),
    "precipitation": (0.0, 100.0),
    "sun_azimuth": (0.0, 360.0),
    "sun_altitude": (-90.0, 90.0),
    "fog_density": (0.0, 100.0),
}


class ScenarioError(ValueError):
    """Malformed scenario content or file."""


class DeltaError(ValueError):
    """A delta could not be applied to its base object."""


@dataclass(frozen=True)
class ActorState:
    id: str
    kind: str
    color: str
    x: float
    y: float
    heading: float
    speed: float
    half_length: float
    half_width: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def extent(self) -> tuple[float, float]:
        return (self.half_length, self.half_width)


@dataclass(frozen=True)
class MapEntityState:
    id: str
    kind: str
    x: float
    y: float
    heading: float
    enabled: bool
    light_policy: Optional[str] = None

    @property
    def extent(self) -> tuple[float, float]:
        return MAP_ENTITY_EXTENTS[self.kind]


@dataclass(frozen=True)
class WeatherState:
    cloudiness: float = 0.0
    precipitation: float = 0.0
    sun_azimuth: float = 0.0
    sun_altitude: float = 45.0
    fog_density: float = 0.0


@dataclass(frozen=True)
class ScriptPoint:
    t: float
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class MapSpec:
    """Route the ego is tasked to follow plus lane geometry."""
    route: tuple[tuple[float, float], ...]
    lane_half_width: float = 1.75
    lane_id: str = "lane_0"


@dataclass(frozen=True)
class PhysicalCondition:
    map: MapSpec
    actors: tuple[ActorState, ...]
    map_entities: tuple[MapEntityState, ...] = ()
    weather: WeatherState = WeatherState()
    actor_scripts: Mapping[str, tuple[ScriptPoint, ...]] = field(default_factory=dict)

    def actor(self, actor_id: str) -> ActorState:
        for a in self.actors:
            if a.id == actor_id:
                return a
        raise KeyError(actor_id)

    def map_entity(self, entity_id: str) -> MapEntityState:
        for e in self.map_entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)

    @property
    def ego(self) -> ActorState:
        return self.actor_by_kind_ego()

    def actor_by_kind_ego(self) -> ActorState:
        for a in self.actors:
            if a.kind == "ego":
                return a
        raise ScenarioError("scenario has no ego actor")


@dataclass(frozen=True)
class ParameterSpec:
    """One configurable ADS parameter: typed, ranged, with a default."""
    module: str
    name: str
    kind: str  # real | enum | boolean
    lo: float = 0.0
    hi: float = 1.0
    choices: tuple = ()
    default: Any = 0.0

    def __post_init__(self):
        if self.kind == "real":
            if not (self.lo <= self.default <= self.hi):
                raise ScenarioError(f"default out of range for {self.key}")
        elif self.kind == "enum":
            if self.default not in self.choices:
                raise ScenarioError(f"default not a choice for {self.key}")
        elif self.kind == "boolean":
            if not isinstance(self.default, bool):
                raise ScenarioError(f"boolean default expected for {self.key}")
        else:
            raise ScenarioError(f"unknown parameter kind {self.kind!r}")

    @property
    def key(self) -> str:
        return f"{self.module}.{self.name}"

    @property
    def width(self) -> float:
        return self.hi - self.lo if self.kind == "real" else 1.0

    def admits(self, value: Any) -> bool:
        if self.kind == "real":
            return isinstance(value, (int, float)) and self.lo <= float(value) <= self.hi
        if self.kind == "enum":
            return value in self.choices
        return isinstance(value, bool)


@dataclass(frozen=True)
class CyberConfiguration:
    """Complete assignment of every ParameterSpec of the ADS."""
    specs: tuple[ParameterSpec, ...]
    values: Mapping[str, Any]  # key "module.name" -> value

    def __post_init__(self):
        keys = [s.key for s in self.specs]
        if len(set(keys)) != len(keys):
            raise ScenarioError("duplicate parameter spec keys")
        missing = [k for k in keys if k not in self.values]
        extra = [k for k in self.values if k not in set(keys)]
        if missing or extra:
            raise ScenarioError(f"configuration mismatch: missing={missing} extra={extra}")
        for s in self.specs:
            if not s.admits(self.values[s.key]):
                raise ScenarioError(f"value {self.values[s.key]!r} outside range of {s.key}")

    def get(self, module: str, name: str) -> Any:
        return self.values[f"{module}.{name}"]

    def spec_for(self, key: str) -> Optional[ParameterSpec]:
        for s in self.specs:
            if s.key == key:
                return s
        return None

    def items(self):
        return sorted(self.values.items())


@dataclass(frozen=True)
class DeltaEntry:
    path: str
    old: Any
    new: Any


@dataclass(frozen=True)
class Delta:
    kind: str  # physical | cyber
    entries: tuple[DeltaEntry, ...]

    def __post_init__(self):
        if self.kind not in ("physical", "cyber"):
            raise DeltaError(f"unknown delta kind {self.kind!r}")
        for e in self.entries:
            if e.old == e.new:
                raise DeltaError(f"no-op entry at {e.path}")

    def inverse(self) -> "Delta":
        return Delta(self.kind, tuple(DeltaEntry(e.path, e.new, e.old) for e in self.entries))

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(e.path for e in self.entries)


_PHYS_PATH = re.compile(
    r"^(actors|map_entities)\[([^\]]+)\]\.([a-z_]+)$|^weather\.([a-z_]+)$"
)

_ACTOR_FIELDS = {"kind", "color", "x", "y", "heading", "speed"}
_ENTITY_FIELDS = {"x", "y", "heading", "enabled", "light_policy"}


def _apply_physical(base: PhysicalCondition, delta: Delta) -> PhysicalCondition:
    actors = {a.id: a for a in base.actors}
    entities = {e.id: e for e in base.map_entities}
    weather = base.weather
    for entry in delta.entries:
        m = _PHYS_PATH.match(entry.path)
        if not m:
            raise DeltaError(f"unresolvable path {entry.path!r}")
        if m.group(4):
            fname = m.group(4)
            if fname not in WEATHER_RANGES:
                raise DeltaError(f"unresolvable path {entry.path!r}")
            cur = getattr(weather, fname)
            if cur != entry.old:
                raise DeltaError(f"stale old value at {entry.path}: {cur!r} != {entry.old!r}")
            weather = replace(weather, **{fname: entry.new})
            continue
        group, ident, fname = m.group(1), m.group(2), m.group(3)
        if group == "actors":
            if ident not in actors or fname not in _ACTOR_FIELDS:
                raise DeltaError(f"unresolvable path {entry.path!r}")
            cur = getattr(actors[ident], fname)
            if cur != entry.old:
                raise DeltaError(f"stale old value at {entry.path}: {cur!r} != {entry.old!r}")
            updates: dict[str, Any] = {fname: entry.new}
            if fname == "kind":
                if entry.new not in ACTOR_KINDS:
                    raise DeltaError(f"unknown actor kind {entry.new!r} at {entry.path}")
                hl, hw = ACTOR_EXTENTS[entry.new]
                updates.update(half_length=hl, half_width=hw)
            if fname == "heading":
                updates[fname] = wrap_angle(entry.new)
            actors[ident] = replace(actors[ident], **updates)
        else:
            if ident not in entities or fname not in _ENTITY_FIELDS:
                raise DeltaError(f"unresolvable path {entry.path!r}")
            cur = getattr(entities[ident], fname)
            if cur != entry.old:
                raise DeltaError(f"stale old value at {entry.path}: {cur!r} != {entry.old!r}")
            val = wrap_angle(entry.new) if fname == "heading" else entry.new
            entities[ident] = replace(entities[ident], **{fname: val})
    return replace(
        base,
        actors=tuple(actors[a.id] for a in base.actors),
        map_entities=tuple(entities[e.id] for e in base.map_entities),
        weather=weather,
    )


def _apply_cyber(base: CyberConfiguration, delta: Delta) -> CyberConfiguration:
    values = dict(base.values)
    for entry in delta.entries:
        spec = base.spec_for(entry.path)
        if spec is None:
            raise DeltaError(f"unresolvable path {entry.path!r}")
        if values[entry.path] != entry.old:
            raise DeltaError(
                f"stale old value at {entry.path}: {values[entry.path]!r} != {entry.old!r}")
        if not spec.admits(entry.new):
            raise DeltaError(f"value {entry.new!r} outside range of {entry.path}")
        values[entry.path] = entry.new
    return CyberConfiguration(base.specs, values)


def apply_delta(base, delta: Delta):
    """Apply a delta, returning a new object of the same type.

    Raises DeltaError on kind mismatch, unresolvable paths, stale old
    values, or (cyber) values outside their parameter range.
    """
    if isinstance(base, PhysicalCondition):
        if delta.kind != "physical":
            raise DeltaError("cyber delta applied to a physical condition")
        return _apply_physical(base, delta)
    if isinstance(base, CyberConfiguration):
        if delta.kind != "cyber":
            raise DeltaError("physical delta applied to a configuration")
        return _apply_cyber(base, delta)
    raise DeltaError(f"unsupported base type {type(base).__name__}")


def delta_magnitude(delta: Delta, widths: Optional[Mapping[str, float]] = None) -> float:
    """Edit distance of a delta: entry count plus per-entry change costs.

    Categorical entries (strings, booleans) cost 1 per change. Numeric
    entries cost |new - old|, divided by the entry's range width when one is
    supplied via `widths` so heterogeneous units become comparable.
    """
    total = float(len(delta.entries))
    for e in delta.entries:
        if isinstance(e.old, bool) or isinstance(e.new, bool) or isinstance(e.old, str):
            total += 1.0
        else:
            diff = abs(float(e.new) - float(e.old))
            if widths:
                w = widths.get(e.path)
                if w:
                    diff /= w
            total += diff
    return total


def validate(p: PhysicalCondition) -> list[tuple[str, str]]:
    """Check every scenario invariant; returns (path, message) per violation."""
    problems: list[tuple[str, str]] = []
    seen: set[str] = set()
    ego_count = 0
    for i, a in enumerate(p.actors):
        path = f"actors[{a.id}]"
        if a.id in seen:
            problems.append((path, f"duplicate actor id {a.id!r}"))
        seen.add(a.id)
        if a.kind not in ACTOR_KINDS:
            problems.append((path, f"unknown kind {a.kind!r}"))
        elif a.kind == "ego":
            ego_count += 1
            if i != 0:
                problems.append((path, "ego must be the first actor"))
        if a.color not in ACTOR_COLORS:
            problems.append((path, f"unknown color {a.color!r}"))
        if a.speed < 0:
            problems.append((path + ".speed", "speed must be >= 0"))
        if a.half_length <= 0 or a.half_width <= 0:
            problems.append((path + ".extent", "extent components must be > 0"))
        if not (0.0 <= a.heading < TWO_PI):
            problems.append((path + ".heading", "heading must lie in [0, 2*pi)"))
    if ego_count != 1:
        problems.append(("actors", f"expected exactly one ego, found {ego_count}"))

    for e in p.map_entities:
        path = f"map_entities[{e.id}]"
        if e.id in seen:
            problems.append((path, f"duplicate entity id {e.id!r}"))
        seen.add(e.id)
        if e.kind not in MAP_ENTITY_KINDS:
            problems.append((path, f"unknown kind {e.kind!r}"))
        if e.kind == "traffic_light":
            if e.light_policy not in LIGHT_POLICIES:
                problems.append((path + ".light_policy", "traffic light needs a policy"))
        elif e.light_policy is not None:
            problems.append((path + ".light_policy", "light_policy only valid on traffic lights"))

    for fname, (lo, hi) in WEATHER_RANGES.items():
        v = getattr(p.weather, fname)
        if not (lo <= v <= hi):
            problems.append((f"weather.{fname}", f"{v} outside [{lo}, {hi}]"))

    actor_ids = {a.id for a in p.actors}
    try:
        ego_id = p.ego.id
    except ScenarioError:
        ego_id = None
    for actor_id, script in p.actor_scripts.items():
        path = f"actor_scripts[{actor_id}]"
        if actor_id not in actor_ids:
            problems.append((path, "script references a missing actor"))
        if actor_id == ego_id:
            problems.append((path, "the ego is driven by the ADS, not a script"))
        times = [pt.t for pt in script]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            problems.append((path, "script times must be strictly increasing"))
        if any(pt.speed < 0 for pt in script):
            problems.append((path, "script speeds must be >= 0"))
    if len(p.map.route) < 2:
        problems.append(("map.route", "route needs at least two points"))
    return problems


# --- scenario files -------------------------------------------------------

SCENARIO_VERSION = 1


def condition_to_obj(p: PhysicalCondition) -> dict:
    actors = []
    for a in p.actors:
        obj = {
            "id": a.id, "kind": a.kind, "color": a.color,
            "x": a.x, "y": a.y, "heading": a.heading, "speed": a.speed,
            "half_length": a.half_length, "half_width": a.half_width,
        }
        script = p.actor_scripts.get(a.id)
        if script:
            obj["script"] = [[pt.t, pt.x, pt.y, pt.heading, pt.speed] for pt in script]
        actors.append(obj)
    entities = []
    for e in p.map_entities:
        obj = {"id": e.id, "kind": e.kind, "x": e.x, "y": e.y,
               "heading": e.heading, "enabled": e.enabled}
        if e.light_policy is not None:
            obj["light_policy"] = e.light_policy
        entities.append(obj)
    return {
        "map": {
            "route": [[x, y] for x, y in p.map.route],
            "lane_half_width": p.map.lane_half_width,
            "lane_id": p.map.lane_id,
        },
        "actors": actors,
        "map_entities": entities,
        "weather": {
            "cloudiness": p.weather.cloudiness,
            "precipitation": p.weather.precipitation,
            "sun_azimuth": p.weather.sun_azimuth,
            "sun_altitude": p.weather.sun_altitude,
            "fog_density": p.weather.fog_density,
        },
    }


def condition_from_obj(obj: Mapping[str, Any]) -> PhysicalCondition:
    try:
        map_spec = MapSpec(
            route=tuple((float(x), float(y)) for x, y in obj["map"]["route"]),
            lane_half_width=float(obj["map"].get("lane_half_width", 1.75)),
            lane_id=str(obj["map"].get("lane_id", "lane_0")),
        )
        actors = []
        scripts: dict[str, tuple[ScriptPoint, ...]] = {}
        for a in obj["actors"]:
            actors.append(ActorState(
                id=str(a["id"]), kind=str(a["kind"]), color=str(a.get("color", "gray")),
                x=float(a["x"]), y=float(a["y"]), heading=float(a["heading"]),
                speed=float(a["speed"]),
                half_length=float(a.get("half_length", ACTOR_EXTENTS.get(a["kind"], (2.25, 0.9))[0])),
                half_width=float(a.get("half_width", ACTOR_EXTENTS.get(a["kind"], (2.25, 0.9))[1])),
            ))
            if "script" in a:
                scripts[str(a["id"])] = tuple(
                    ScriptPoint(*[float(v) for v in row]) for row in a["script"])
        entities = tuple(MapEntityState(
            id=str(e["id"]), kind=str(e["kind"]), x=float(e["x"]), y=float(e["y"]),
            heading=float(e.get("heading", 0.0)), enabled=bool(e.get("enabled", True)),
            light_policy=e.get("light_policy"),
        ) for e in obj.get("map_entities", []))
        w = obj.get("weather", {})
        weather = WeatherState(
            cloudiness=float(w.get("cloudiness", 0.0)),
            precipitation=float(w.get("precipitation", 0.0)),
            sun_azimuth=float(w.get("sun_azimuth", 0.0)),
            sun_altitude=float(w.get("sun_altitude", 45.0)),
            fog_density=float(w.get("fog_density", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario object: {exc}") from exc
    return PhysicalCondition(map=map_spec, actors=tuple(actors),
                             map_entities=entities, weather=weather,
                             actor_scripts=scripts)


@dataclass(frozen=True)
class ScenarioFile:
    scenario_id: str
    condition: PhysicalCondition
    ego_config_overrides: Mapping[str, Any] = field(default_factory=dict)
    sim: Mapping[str, Any] = field(default_factory=dict)  # optional dt/horizon/seed


def save_scenario(sc: ScenarioFile, path: str) -> None:
    obj = {"version": SCENARIO_VERSION, "scenario_id": sc.scenario_id}
    obj.update(condition_to_obj(sc.condition))
    obj["ego_config_overrides"] = dict(sorted(sc.ego_config_overrides.items()))
    if sc.sim:
        obj["sim"] = dict(sorted(sc.sim.items()))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path: str) -> ScenarioFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path!r}: {exc}") from exc
    if obj.get("version") != SCENARIO_VERSION:
        raise ScenarioError(f"unsupported scenario version {obj.get('version')!r}")
    condition = condition_from_obj(obj)
    problems = validate(condition)
    if problems:
        detail = "; ".join(f"{p}: {m}" for p, m in problems)
        raise ScenarioError(f"invalid scenario: {detail}")
    return ScenarioFile(
        scenario_id=str(obj.get("scenario_id", "scenario")),
        condition=condition,
        ego_config_overrides=dict(obj.get("ego_config_overrides", {})),
        sim=dict(obj.get("sim", {})),
    )
