"""Execution records: serialization, reconstruction, and trajectory deviation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional

from .messages import ChannelMessage, tree_from_obj, tree_to_obj
from .scenario import (PhysicalCondition, ScenarioError, ScriptPoint,
                       condition_from_obj, condition_to_obj)

RECORD_VERSION = 1

_HEADER_FIELDS = {"version", "scenario_id", "seed", "dt", "horizon", "config", "condition"}
_MSG_FIELDS = {"kind", "channel", "seq", "t", "tree"}
_TRAJ_FIELDS = {"kind", "actor", "t", "x", "y", "heading", "speed"}
_VERDICT_FIELDS = {"kind", "verdict", "time", "participants"}


class RecordFormatError(ValueError):
    """A record file that does not follow the frozen line schema."""


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class AccidentVerdict:
    kind: str  # none | collision | emergency_braking
    time: Optional[float] = None
    participants: tuple[str, ...] = ()

    @property
    def is_accident(self) -> bool:
        return self.kind != "none"


@dataclass(frozen=True)
class RecordMeta:
    scenario_id: str
    seed: int
    dt: float
    horizon: float
    config: tuple[tuple[str, Any], ...]  # sorted ("module.name", value) pairs
    condition: PhysicalCondition


@dataclass(frozen=True)
class ExecutionRecord:
    meta: RecordMeta
    channels: Mapping[str, tuple[ChannelMessage, ...]]
    trajectories: Mapping[str, tuple[TrajectorySample, ...]]
    verdict: AccidentVerdict

    @property
    def end_time(self) -> float:
        return max(samples[-1].t for samples in self.trajectories.values())

    def ego_id(self) -> str:
        return self.meta.condition.ego.id


def known_channels() -> tuple[str, ...]:
    from .ads.graph import CHANNELS
    return CHANNELS


def save_record(record: ExecutionRecord, path: str) -> None:
    """Line-delimited JSON: one header, one line per message or trajectory
    sample, one verdict line. Deterministic byte-for-byte for equal records."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "version": RECORD_VERSION,
            "scenario_id": record.meta.scenario_id,
            "seed": record.meta.seed,
            "dt": record.meta.dt,
            "horizon": record.meta.horizon,
            "config": [[k, v] for k, v in record.meta.config],
            "condition": condition_to_obj(record.meta.condition),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for channel in known_channels():
            for msg in record.channels.get(channel, ()):
                fh.write(json.dumps({
                    "kind": "msg", "channel": msg.channel, "seq": msg.seq,
                    "t": msg.timestamp, "tree": tree_to_obj(msg.tree),
                }, sort_keys=True) + "\n")
        for actor_id in sorted(record.trajectories):
            for s in record.trajectories[actor_id]:
                fh.write(json.dumps({
                    "kind": "traj", "actor": actor_id, "t": s.t, "x": s.x,
                    "y": s.y, "heading": s.heading, "speed": s.speed,
                }, sort_keys=True) + "\n")
        verdict = {
            "kind": "verdict", "verdict": record.verdict.kind,
            "time": record.verdict.time,
            "participants": list(record.verdict.participants),
        }
        fh.write(json.dumps(verdict, sort_keys=True) + "\n")


def load_record(path: str) -> ExecutionRecord:
    channels_seen = set(known_channels())
    channels: dict[str, list[ChannelMessage]] = {}
    trajectories: dict[str, list[TrajectorySample]] = {}
    verdict: Optional[AccidentVerdict] = None
    meta: Optional[RecordMeta] = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise RecordFormatError(f"cannot read record {path!r}: {exc}") from exc
    if not lines:
        raise RecordFormatError("empty record file")
    for lineno, line in enumerate(lines):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"line {lineno + 1}: not JSON ({exc})") from exc
        if lineno == 0:
            if set(obj) != _HEADER_FIELDS:
                raise RecordFormatError(
                    f"header fields {sorted(obj)} != {sorted(_HEADER_FIELDS)}")
            if obj["version"] != RECORD_VERSION:
                raise RecordFormatError(f"unsupported record version {obj['version']!r}")
            try:
                condition = condition_from_obj(obj["condition"])
            except ScenarioError as exc:
                raise RecordFormatError(str(exc)) from exc
            meta = RecordMeta(
                scenario_id=str(obj["scenario_id"]), seed=int(obj["seed"]),
                dt=float(obj["dt"]), horizon=float(obj["horizon"]),
                config=tuple((str(k), v) for k, v in obj["config"]),
                condition=condition,
            )
            continue
        kind = obj.get("kind")
        if kind == "msg":
            if set(obj) != _MSG_FIELDS:
                raise RecordFormatError(f"line {lineno + 1}: unknown message fields")
            channel = obj["channel"]
            if channel not in channels_seen:
                raise RecordFormatError(f"line {lineno + 1}: unknown channel {channel!r}")
            channels.setdefault(channel, []).append(ChannelMessage(
                channel=channel, timestamp=float(obj["t"]), seq=int(obj["seq"]),
                tree=tree_from_obj(obj["tree"])))
        elif kind == "traj":
            if set(obj) != _TRAJ_FIELDS:
                raise RecordFormatError(f"line {lineno + 1}: unknown trajectory fields")
            trajectories.setdefault(str(obj["actor"]), []).append(TrajectorySample(
                t=float(obj["t"]), x=float(obj["x"]), y=float(obj["y"]),
                heading=float(obj["heading"]), speed=float(obj["speed"])))
        elif kind == "verdict":
            if set(obj) != _VERDICT_FIELDS:
                raise RecordFormatError(f"line {lineno + 1}: unknown verdict fields")
            verdict = AccidentVerdict(
                kind=str(obj["verdict"]),
                time=None if obj["time"] is None else float(obj["time"]),
                participants=tuple(str(p) for p in obj["participants"]))
        else:
            raise RecordFormatError(f"line {lineno + 1}: unknown line kind {kind!r}")
    if meta is None or verdict is None:
        raise RecordFormatError("record missing header or verdict")
    for msgs in channels.values():
        msgs.sort(key=lambda m: m.seq)
    return ExecutionRecord(
        meta=meta,
        channels={ch: tuple(msgs) for ch, msgs in channels.items()},
        trajectories={a: tuple(s) for a, s in trajectories.items()},
        verdict=verdict,
    )


# --- coordinate transforms -------------------------------------------------

@dataclass(frozen=True)
class FrameTransform:
    """Rotation followed by translation, mapping log coordinates to world."""
    angle: float
    tx: float
    ty: float

    @staticmethod
    def identity() -> "FrameTransform":
        return FrameTransform(0.0, 0.0, 0.0)

    def compose(self, inner: "FrameTransform") -> "FrameTransform":
        """self o inner: apply `inner` first, then `self`."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        return FrameTransform(
            angle=self.angle + inner.angle,
            tx=self.tx + c * inner.tx - s * inner.ty,
            ty=self.ty + s * inner.tx + c * inner.ty,
        )


def to_world(point: tuple[float, float], t: FrameTransform) -> tuple[float, float]:
    c, s = math.cos(t.angle), math.sin(t.angle)
    x, y = point
    return (c * x - s * y + t.tx, s * x + c * y + t.ty)


# --- reconstruction & alignment --------------------------------------------

def reconstruct_scenario(record: ExecutionRecord) -> PhysicalCondition:
    """Scenario whose non-ego actors replay their recorded trajectories as
    scripts; the ego stays ADS-driven so replay reproduces the accident with
    the recorded configuration."""
    if not record.trajectories:
        raise ScenarioError("record has no trajectories to reconstruct from")
    base = record.meta.condition
    ego_id = base.ego.id
    scripts: dict[str, tuple[ScriptPoint, ...]] = {}
    actors = []
    for actor in base.actors:
        samples = record.trajectories.get(actor.id)
        if not samples:
            raise ScenarioError(f"record lacks a trajectory for actor {actor.id!r}")
        first = samples[0]
        # Pin the declared initial state to the recording so the replay's
        # script transforms are the identity.
        actors.append(replace(actor, x=first.x, y=first.y,
                              heading=first.heading, speed=first.speed))
        if actor.id != ego_id:
            scripts[actor.id] = tuple(
                ScriptPoint(t=s.t, x=s.x, y=s.y, heading=s.heading, speed=s.speed)
                for s in samples)
    return replace(base, actors=tuple(actors), actor_scripts=scripts)


@dataclass(frozen=True)
class AlignmentParams:
    """Windowing for cross-execution comparisons.

    `accident_time` is d of the accident record; the compared window is
    [0, d - exclusion]; `budget` is the admissible mean deviation. The
    per-record time offsets re-base each record to its own start.
    """
    accident_time: float
    exclusion: float = 3.0
    budget: float = 5.0
    offset_a: float = 0.0
    offset_b: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.exclusion < self.accident_time):
            raise ValueError("exclusion window must satisfy 0 <= delta < d")
        if self.budget <= 0.0:
            raise ValueError("deviation budget must be positive")


class DeviationWindowError(ValueError):
    """Comparison window not covered by one of the records."""


def trajectory_deviation(rec_a: ExecutionRecord, rec_b: ExecutionRecord,
                         actors: str, align: AlignmentParams) -> float:
    """Mean over window samples of the summed per-actor positional L2 gap.

    `actors` is "all" or "ego_only". Sample times come from rec_a's dt grid.
    """
    if actors not in ("all", "ego_only"):
        raise ValueError(f"unknown actor selection {actors!r}")
    dt = rec_a.meta.dt
    if abs(dt - rec_b.meta.dt) > 1e-12:
        raise DeviationWindowError("records use different time steps")
    window_end = align.accident_time - align.exclusion
    n = int(math.floor(window_end / dt + 1e-9)) + 1
    if actors == "ego_only":
        ids = [rec_a.ego_id()]
    else:
        ids = sorted(rec_a.trajectories)
    total = 0.0
    for actor_id in ids:
        ta = rec_a.trajectories.get(actor_id)
        tb = rec_b.trajectories.get(actor_id)
        if ta is None or tb is None:
            raise DeviationWindowError(f"actor {actor_id!r} missing from a record")
        if len(ta) < n or len(tb) < n:
            raise DeviationWindowError(
                f"window [0, {window_end:.3f}] exceeds a record for {actor_id!r}")
        for i in range(n):
            total += math.hypot(ta[i].x - tb[i].x, ta[i].y - tb[i].y)
    return total / n


def trim_tail(record: ExecutionRecord, seconds: float = 30.0) -> ExecutionRecord:
    """Keep only the trailing window of a record; verdict is preserved."""
    start = max(0.0, record.end_time - seconds)
    channels = {
        ch: tuple(m for m in msgs if m.timestamp >= start - 1e-9)
        for ch, msgs in record.channels.items()
    }
    trajectories = {
        actor: tuple(s for s in samples if s.t >= start - 1e-9)
        for actor, samples in record.trajectories.items()
    }
    return replace(record, channels=channels, trajectories=trajectories)
