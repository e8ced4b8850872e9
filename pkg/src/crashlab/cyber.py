"""Cyber mutation: search the identified module's parameter space for the
minimal configuration change that suppresses the accident while keeping the
ego's pre-accident behavior intact.

Shares the NSGA-II engine with the physical phase; only the genome differs.
Objectives: ego trajectory dissimilarity (mean squared error against the
accident execution, which rules out freeze-the-ego fixes) and configuration
edit cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .recording import AlignmentParams, ExecutionRecord, trajectory_deviation
from .scenario import (CyberConfiguration, Delta, DeltaEntry, PhysicalCondition,
                       apply_delta, delta_magnitude)
from .search import (Evaluation, GeneSpec, Genome, SearchResult,
                     SearchSettings, nsga2_search)
from .simulator import ExecutionResult, SimulationParams, run_execution


def build_genes(config: CyberConfiguration,
                modules: Optional[Sequence[str]] = None) -> list[GeneSpec]:
    genes = []
    for spec in config.specs:
        if modules is not None and spec.module not in modules:
            continue
        baseline = config.values[spec.key]
        if spec.kind == "real":
            genes.append(GeneSpec(key=spec.key, kind="real", lo=spec.lo,
                                  hi=spec.hi, baseline=baseline))
        elif spec.kind == "enum":
            genes.append(GeneSpec(key=spec.key, kind="enum",
                                  choices=spec.choices, baseline=baseline))
        else:
            genes.append(GeneSpec(key=spec.key, kind="boolean", baseline=baseline))
    return genes


def gene_widths(config: CyberConfiguration) -> dict[str, float]:
    return {s.key: s.width for s in config.specs if s.kind == "real"}


def genome_to_delta(genome: Genome, config: CyberConfiguration) -> Delta:
    entries = []
    for key, value in genome:
        old = config.values[key]
        if value == old:
            continue
        entries.append(DeltaEntry(path=key, old=old, new=value))
    return Delta(kind="cyber", entries=tuple(entries))


@dataclass(frozen=True)
class CyberProblem:
    condition: PhysicalCondition       # accident scenario, held fixed
    config: CyberConfiguration
    params: SimulationParams
    orig_record: ExecutionRecord
    modules: Optional[tuple[str, ...]]  # None scopes the search to everything


def ego_dissimilarity(orig_record: ExecutionRecord, trajectories) -> float:
    """Mean squared positional error of the ego on the common window."""
    ego_id = orig_record.ego_id()
    ref = orig_record.trajectories[ego_id]
    cand = trajectories[ego_id]
    n = min(len(ref), len(cand))
    err = 0.0
    for i in range(n):
        dx = ref[i].x - cand[i].x
        dy = ref[i].y - cand[i].y
        err += dx * dx + dy * dy
    return err / n if n else 0.0


def config_cost(delta: Delta, widths) -> float:
    return delta_magnitude(delta, widths)


def make_evaluator(problem: CyberProblem,
                   widths) -> Callable[[Genome], Evaluation]:
    horizon = problem.params.horizon

    def evaluate(genome: Genome) -> Evaluation:
        delta = genome_to_delta(genome, problem.config)
        if not delta.entries:
            return Evaluation(objectives=(0.0, 0.0), feasible=False,
                              violation=horizon)
        mutated = apply_delta(problem.config, delta)
        outcome = run_execution(mutated, problem.condition, problem.params)
        h1 = ego_dissimilarity(problem.orig_record, outcome.trajectories)
        h2 = config_cost(delta, widths)
        if outcome.verdict.is_accident:
            return Evaluation(objectives=(h1, h2), feasible=False,
                              violation=horizon - outcome.verdict.time)
        return Evaluation(objectives=(h1, h2), feasible=True)

    return evaluate


@dataclass(frozen=True)
class MisconfigCandidate:
    genome: Genome
    delta: Delta
    objectives: tuple[float, float]

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(e.path for e in self.delta.entries)


@dataclass
class CyberSearchOutput:
    result: SearchResult
    candidates: list[MisconfigCandidate]  # ranked by (cost, dissimilarity)
    widths: dict[str, float]


class CyberSearchError(RuntimeError):
    """No feasible configuration mutation; expected for missing-feature
    accidents that no parameter value can prevent."""

    def __init__(self, message: str, best_violations=()):
        super().__init__(message)
        self.best_violations = tuple(best_violations)


def search_misconfigurations(problem: CyberProblem,
                             settings: SearchSettings) -> CyberSearchOutput:
    genes = build_genes(problem.config, problem.modules)
    if not genes:
        raise CyberSearchError(f"no parameters in scope {problem.modules!r}")
    widths = gene_widths(problem.config)
    evaluate = make_evaluator(problem, widths)
    result = nsga2_search(genes, evaluate, settings)
    candidates = [
        MisconfigCandidate(genome=ind.genome,
                           delta=genome_to_delta(ind.genome, problem.config),
                           objectives=tuple(ind.objectives))
        for ind in result.front
    ]
    candidates = [c for c in candidates if c.delta.entries]
    candidates.sort(key=lambda c: (c.objectives[1], c.objectives[0], c.genome))
    return CyberSearchOutput(result=result, candidates=candidates, widths=widths)


class PinpointError(RuntimeError):
    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


@dataclass
class PinpointedMisconfiguration:
    candidate: MisconfigCandidate
    fixed: ExecutionResult
    deviation_pre_accident: float
    deviation_full_window: float
    rejected: list[tuple[MisconfigCandidate, str]]

    @property
    def entries(self) -> tuple[DeltaEntry, ...]:
        return self.candidate.delta.entries


def pinpoint_misconfiguration(problem: CyberProblem, output: CyberSearchOutput,
                              align_exclusion: float, align_budget: float,
                              max_candidates: int = 12) -> PinpointedMisconfiguration:
    """Among behavior-preserving front members, report the cheapest one.

    Candidates arrive cost-ranked; the first whose replayed ego stays within
    the pre-accident deviation budget is therefore minimal. The full-window
    deviation is reported alongside for human review, not gated on.
    """
    if not output.candidates:
        raise CyberSearchError(
            "cyber search found no feasible configuration mutation",
            best_violations=[(ind.genome, ind.violation)
                             for ind in output.result.best_infeasible[:5]])
    verdict = problem.orig_record.verdict
    d = verdict.time if verdict.time is not None else problem.orig_record.end_time
    align = AlignmentParams(accident_time=d, exclusion=min(align_exclusion, d / 2),
                            budget=align_budget)
    rejected: list[tuple[MisconfigCandidate, str]] = []
    for candidate in output.candidates[:max_candidates]:
        mutated = apply_delta(problem.config, candidate.delta)
        outcome = run_execution(mutated, problem.condition, problem.params)
        if outcome.verdict.is_accident:
            rejected.append((candidate, "not reproducibly accident-free"))
            continue
        deviation = trajectory_deviation(problem.orig_record, outcome.record,
                                         "ego_only", align)
        if deviation >= align.budget:
            rejected.append((candidate,
                             f"ego deviation {deviation:.3f} >= {align.budget}"))
            continue
        full = _full_window_deviation(problem.orig_record, outcome.record)
        return PinpointedMisconfiguration(
            candidate=candidate, fixed=outcome,
            deviation_pre_accident=deviation, deviation_full_window=full,
            rejected=rejected)
    raise PinpointError(
        "every feasible mutation changes the ego before the accident window",
        diagnostics=[(c.parameter_names, why) for c, why in rejected])


def _full_window_deviation(rec_a: ExecutionRecord, rec_b: ExecutionRecord) -> float:
    """Mean ego gap over the whole common window (post-accident included)."""
    ego_id = rec_a.ego_id()
    ta, tb = rec_a.trajectories[ego_id], rec_b.trajectories[ego_id]
    n = min(len(ta), len(tb))
    if n == 0:
        return 0.0
    total = sum(math.hypot(ta[i].x - tb[i].x, ta[i].y - tb[i].y) for i in range(n))
    return total / n
