"""Physical mutation: search the environment for the minimal accident-
suppressing change, yielding the triggering entity and a reference execution.

Objectives, all minimized subject to "no accident on replay":
  * suspiciousness  - rewards mutating entities close to and ahead of the
    ego at the original accident moment;
  * scenario dissimilarity - summed per-actor mean squared trajectory error
    against the original execution, so degenerate freeze-everything fixes
    lose out;
  * mutation cost - sparse edit distance of the applied delta.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .geometry import TWO_PI, wrap_angle
from .recording import AlignmentParams, ExecutionRecord, trajectory_deviation
from .scenario import (ACTOR_COLORS, Delta, DeltaEntry, LIGHT_POLICIES,
                       PhysicalCondition, apply_delta, delta_magnitude)
from .search import (Evaluation, EvaluatedIndividual, GeneSpec, Genome,
                     SearchResult, SearchSettings, nsga2_search)
from .simulator import ExecutionResult, SimulationParams, run_execution

PROXIMITY_GAIN = 10.0  # meters; balances distance against bearing
MIN_DISTANCE = 1.0
POSITION_SPAN = 3.0    # +/- meters around the baseline position
SPEED_RANGE = (0.0, 20.0)

KIND_SWAPS = {"sedan": "truck", "truck": "sedan",
              "cyclist": "pedestrian", "pedestrian": "cyclist"}

_ENTITY_PATH = re.compile(r"^(actors|map_entities)\[([^\]]+)\]\.")


def build_genes(condition: PhysicalCondition) -> list[GeneSpec]:
    """Mutable gene space over a scenario: every surrounding entity property
    plus the weather. The ego is never mutable."""
    genes: list[GeneSpec] = []
    ego_id = condition.ego.id
    for actor in condition.actors:
        if actor.id == ego_id:
            continue
        base = f"actors[{actor.id}]"
        swap = KIND_SWAPS.get(actor.kind)
        if swap:
            genes.append(GeneSpec(key=f"{base}.kind", kind="enum",
                                  choices=(actor.kind, swap), baseline=actor.kind))
        genes.append(GeneSpec(key=f"{base}.color", kind="enum",
                              choices=ACTOR_COLORS, baseline=actor.color))
        genes.append(GeneSpec(key=f"{base}.x", kind="real", lo=actor.x - POSITION_SPAN,
                              hi=actor.x + POSITION_SPAN, baseline=actor.x))
        genes.append(GeneSpec(key=f"{base}.y", kind="real", lo=actor.y - POSITION_SPAN,
                              hi=actor.y + POSITION_SPAN, baseline=actor.y))
        genes.append(GeneSpec(key=f"{base}.heading", kind="real",
                              lo=actor.heading - math.pi, hi=actor.heading + math.pi,
                              baseline=actor.heading))
        script = condition.actor_scripts.get(actor.id)
        scriptable = script is None or script[0].speed > 1e-9
        if scriptable:
            genes.append(GeneSpec(key=f"{base}.speed", kind="real",
                                  lo=SPEED_RANGE[0], hi=SPEED_RANGE[1],
                                  baseline=actor.speed))
    for ent in condition.map_entities:
        base = f"map_entities[{ent.id}]"
        if ent.kind in ("traffic_cone", "box"):
            genes.append(GeneSpec(key=f"{base}.x", kind="real", lo=ent.x - POSITION_SPAN,
                                  hi=ent.x + POSITION_SPAN, baseline=ent.x))
            genes.append(GeneSpec(key=f"{base}.y", kind="real", lo=ent.y - POSITION_SPAN,
                                  hi=ent.y + POSITION_SPAN, baseline=ent.y))
            genes.append(GeneSpec(key=f"{base}.heading", kind="real",
                                  lo=ent.heading - math.pi, hi=ent.heading + math.pi,
                                  baseline=ent.heading))
        elif ent.kind in ("building", "vegetation"):
            genes.append(GeneSpec(key=f"{base}.enabled", kind="boolean",
                                  baseline=ent.enabled))
        elif ent.kind == "traffic_light":
            genes.append(GeneSpec(key=f"{base}.light_policy", kind="enum",
                                  choices=LIGHT_POLICIES, baseline=ent.light_policy))
            genes.append(GeneSpec(key=f"{base}.enabled", kind="boolean",
                                  baseline=ent.enabled))
    for fname, (lo, hi) in (
            ("cloudiness", (0.0, 100.0)), ("precipitation", (0.0, 100.0)),
            ("sun_azimuth", (0.0, 360.0)), ("sun_altitude", (-90.0, 90.0)),
            ("fog_density", (0.0, 100.0))):
        genes.append(GeneSpec(key=f"weather.{fname}", kind="real", lo=lo, hi=hi,
                              baseline=getattr(condition.weather, fname)))
    return genes


def gene_widths(genes: Sequence[GeneSpec]) -> dict[str, float]:
    return {g.key: (g.hi - g.lo) for g in genes if g.kind == "real"}


def genome_to_delta(genome: Genome, condition: PhysicalCondition) -> Delta:
    entries = []
    for key, value in genome:
        old = _current_value(condition, key)
        if key.endswith(".heading"):
            value = wrap_angle(value)
        if value == old:
            continue
        entries.append(DeltaEntry(path=key, old=old, new=value))
    return Delta(kind="physical", entries=tuple(entries))


def _current_value(condition: PhysicalCondition, path: str):
    if path.startswith("weather."):
        return getattr(condition.weather, path.split(".", 1)[1])
    m = _ENTITY_PATH.match(path)
    if not m:
        raise KeyError(path)
    field = path[m.end():]
    if m.group(1) == "actors":
        return getattr(condition.actor(m.group(2)), field)
    return getattr(condition.map_entity(m.group(2)), field)


@dataclass(frozen=True)
class PhysicalProblem:
    condition: PhysicalCondition          # reconstructed accident scenario
    config: "object"                      # CyberConfiguration, held fixed
    params: SimulationParams
    orig_record: ExecutionRecord


def suspiciousness(delta: Delta, orig_record: ExecutionRecord,
                   gain: float = PROXIMITY_GAIN) -> float:
    """Negated sum of proximity/bearing salience of each mutated entity,
    taken at the original accident time. Weather mutations carry no pose and
    contribute nothing."""
    verdict = orig_record.verdict
    d = verdict.time if verdict.time is not None else orig_record.end_time
    ego_id = orig_record.ego_id()
    ego_traj = orig_record.trajectories[ego_id]
    dt = orig_record.meta.dt
    idx = min(int(round(d / dt)), len(ego_traj) - 1)
    ego = ego_traj[idx]

    seen: set[str] = set()
    total = 0.0
    for entry in delta.entries:
        m = _ENTITY_PATH.match(entry.path)
        if not m or m.group(2) in seen:
            continue
        seen.add(m.group(2))
        if m.group(1) == "actors":
            traj = orig_record.trajectories.get(m.group(2))
            if not traj:
                continue
            sample = traj[min(idx, len(traj) - 1)]
            ex, ey = sample.x, sample.y
        else:
            ent = orig_record.meta.condition.map_entity(m.group(2))
            ex, ey = ent.x, ent.y
        dist = max(math.hypot(ex - ego.x, ey - ego.y), MIN_DISTANCE)
        bearing = math.atan2(ey - ego.y, ex - ego.x)
        total += gain / dist + math.cos(bearing - ego.heading)
    return -total


def scenario_dissimilarity(orig_record: ExecutionRecord,
                           trajectories) -> float:
    """Sum over actors of mean squared positional error on the common window."""
    total = 0.0
    for actor_id, ref in orig_record.trajectories.items():
        cand = trajectories.get(actor_id)
        if cand is None:
            continue
        n = min(len(ref), len(cand))
        if n == 0:
            continue
        err = 0.0
        for i in range(n):
            dx = ref[i].x - cand[i].x
            dy = ref[i].y - cand[i].y
            err += dx * dx + dy * dy
        total += err / n
    return total


def mutation_cost(delta: Delta, widths) -> float:
    return delta_magnitude(delta, widths)


@dataclass(frozen=True)
class TriggerCandidate:
    genome: Genome
    delta: Delta
    objectives: tuple[float, float, float]

    @property
    def entity_ids(self) -> tuple[str, ...]:
        ids = []
        for entry in self.delta.entries:
            m = _ENTITY_PATH.match(entry.path)
            name = m.group(2) if m else "weather"
            if name not in ids:
                ids.append(name)
        return tuple(ids)


@dataclass
class PhysicalSearchOutput:
    result: SearchResult
    candidates: list[TriggerCandidate]  # ranked by (cost, suspiciousness, dissimilarity)
    widths: dict[str, float]


def make_evaluator(problem: PhysicalProblem,
                   widths: dict[str, float]) -> Callable[[Genome], Evaluation]:
    horizon = problem.params.horizon

    def evaluate(genome: Genome) -> Evaluation:
        delta = genome_to_delta(genome, problem.condition)
        if not delta.entries:
            # Identity mutation replays the accident; maximally infeasible.
            return Evaluation(objectives=(0.0, 0.0, 0.0), feasible=False,
                              violation=horizon)
        mutated = apply_delta(problem.condition, delta)
        outcome = run_execution(problem.config, mutated, problem.params)
        f1 = suspiciousness(delta, problem.orig_record)
        f2 = scenario_dissimilarity(problem.orig_record, outcome.trajectories)
        f3 = mutation_cost(delta, widths)
        if outcome.verdict.is_accident:
            return Evaluation(objectives=(f1, f2, f3), feasible=False,
                              violation=horizon - outcome.verdict.time)
        return Evaluation(objectives=(f1, f2, f3), feasible=True)

    return evaluate


def search_triggers(problem: PhysicalProblem,
                    settings: SearchSettings) -> PhysicalSearchOutput:
    genes = build_genes(problem.condition)
    widths = gene_widths(genes)
    evaluate = make_evaluator(problem, widths)
    result = nsga2_search(genes, evaluate, settings)
    candidates = [
        TriggerCandidate(genome=ind.genome,
                         delta=genome_to_delta(ind.genome, problem.condition),
                         objectives=tuple(ind.objectives))
        for ind in result.front
    ]
    candidates = [c for c in candidates if c.delta.entries]
    candidates.sort(key=lambda c: (c.objectives[2], c.objectives[0],
                                   c.objectives[1], c.genome))
    return PhysicalSearchOutput(result=result, candidates=candidates, widths=widths)


class TriggerSelectionError(RuntimeError):
    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


@dataclass
class SelectedTrigger:
    candidate: TriggerCandidate
    reference: ExecutionResult
    deviation: float
    rejected: list[tuple[TriggerCandidate, str]]


def select_trigger(problem: PhysicalProblem, output: PhysicalSearchOutput,
                   align_exclusion: float, align_budget: float,
                   accept: Optional[Callable[[TriggerCandidate, ExecutionResult], bool]] = None,
                   max_candidates: int = 12) -> SelectedTrigger:
    """Walk the ranked front: the first candidate whose reference execution
    stays within the pre-accident deviation budget (and passes the optional
    acceptance hook) wins. Raises with per-candidate diagnostics otherwise."""
    if not output.candidates:
        raise TriggerSelectionError(
            "physical search produced no feasible candidate",
            diagnostics=[("search", f"{output.result.evaluations} evaluations, "
                                    f"0 feasible")])
    verdict = problem.orig_record.verdict
    d = verdict.time if verdict.time is not None else problem.orig_record.end_time
    align = AlignmentParams(accident_time=d, exclusion=min(align_exclusion, d / 2),
                            budget=align_budget)
    rejected: list[tuple[TriggerCandidate, str]] = []
    for candidate in output.candidates[:max_candidates]:
        mutated = apply_delta(problem.condition, candidate.delta)
        outcome = run_execution(problem.config, mutated, problem.params)
        if outcome.verdict.is_accident:
            rejected.append((candidate, "not reproducibly accident-free"))
            continue
        deviation = trajectory_deviation(problem.orig_record, outcome.record,
                                         "all", align)
        if deviation >= align.budget:
            rejected.append((candidate, f"deviation {deviation:.3f} >= {align.budget}"))
            continue
        if accept is not None and not accept(candidate, outcome):
            rejected.append((candidate, "rejected by acceptance hook"))
            continue
        return SelectedTrigger(candidate=candidate, reference=outcome,
                               deviation=deviation, rejected=rejected)
    raise TriggerSelectionError(
        "no front candidate satisfies the deviation bound",
        diagnostics=[(c.entity_ids, why) for c, why in rejected])
