"""Constrained NSGA-II over sparse mutation genomes.

A genome is a sparse set of gene assignments (inactive genes leave the
baseline untouched), so the number of active genes is itself part of the
objective landscape. Constraint handling follows constrained domination:
any feasible individual beats any infeasible one, infeasible individuals
compare by violation, feasible ones by Pareto domination. Evaluations are
cached by canonical genome, gathered in a fixed order, and the whole search
is a pure function of its seed.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

Genome = tuple[tuple[str, Any], ...]  # sorted (gene key, value) pairs


@dataclass(frozen=True)
class GeneSpec:
    key: str
    kind: str  # real | enum | boolean
    lo: float = 0.0
    hi: float = 1.0
    choices: tuple = ()
    baseline: Any = None


@dataclass(frozen=True)
class Evaluation:
    objectives: tuple[float, ...]
    feasible: bool
    violation: float = 0.0


@dataclass(frozen=True)
class EvaluatedIndividual:
    genome: Genome
    objectives: tuple[float, ...]
    feasible: bool
    violation: float


@dataclass(frozen=True)
class SearchSettings:
    population: int = 24
    generations: int = 25
    crossover_rate: float = 0.9
    mutation_rate: Optional[float] = None  # default 1/genome length
    seed: int = 0
    workers: int = 1
    patience: int = 6  # stop after this many generations without front progress
    min_generations: int = 4
    sbx_eta: float = 12.0
    poly_eta: float = 18.0
    init_active: tuple[int, int] = (1, 2)
    deactivate_prob: float = 0.2

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be even and at least 4")
        if not (0.0 <= self.crossover_rate <= 1.0):
            raise ValueError("crossover rate must lie in [0, 1]")
        if self.mutation_rate is not None and not (0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("mutation rate must lie in [0, 1]")


@dataclass
class SearchResult:
    front: list[EvaluatedIndividual]
    evaluations: int
    feasible_count: int
    generations_run: int
    best_infeasible: list[EvaluatedIndividual] = field(default_factory=list)

    @property
    def found_feasible(self) -> bool:
        return bool(self.front)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto domination: no worse everywhere, better somewhere."""
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def non_dominated_sort(points: Sequence[Sequence[float]]) -> list[list[int]]:
    """Fast non-dominated sorting; returns fronts as index lists."""
    n = len(points)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(points[p], points[q]):
                dominated_by[p].append(q)
            elif dominates(points[q], points[p]):
                domination_count[p] += 1
        if domination_count[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    fronts.pop()
    return fronts


def crowding_distances(points: Sequence[Sequence[float]]) -> list[float]:
    """Crowding distance within one front; extremes get infinity."""
    n = len(points)
    if n == 0:
        return []
    dist = [0.0] * n
    m = len(points[0])
    for obj in range(m):
        order = sorted(range(n), key=lambda i: points[i][obj])
        dist[order[0]] = float("inf")
        dist[order[-1]] = float("inf")
        lo = points[order[0]][obj]
        hi = points[order[-1]][obj]
        if hi - lo <= 0.0:
            continue
        for rank in range(1, n - 1):
            i = order[rank]
            if dist[i] == float("inf"):
                continue
            nxt = points[order[rank + 1]][obj]
            prv = points[order[rank - 1]][obj]
            dist[i] += (nxt - prv) / (hi - lo)
    return dist


def _constrained_dominates(a: EvaluatedIndividual, b: EvaluatedIndividual) -> bool:
    if a.feasible and not b.feasible:
        return True
    if not a.feasible and b.feasible:
        return False
    if not a.feasible:
        return a.violation < b.violation
    return dominates(a.objectives, b.objectives)


def _sort_population(population: list[EvaluatedIndividual]):
    """Constrained non-dominated sort plus per-front crowding distances."""
    n = len(population)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    count = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if _constrained_dominates(population[p], population[q]):
                dominated_by[p].append(q)
            elif _constrained_dominates(population[q], population[p]):
                count[p] += 1
        if count[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                count[q] -= 1
                if count[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    fronts.pop()
    rank = [0] * n
    crowd = [0.0] * n
    for front_idx, front in enumerate(fronts):
        pts = [population[i].objectives for i in front]
        for i, d in zip(front, crowding_distances(pts)):
            rank[i] = front_idx
            crowd[i] = d
    return fronts, rank, crowd


class GenomeOps:
    """Variation operators over the sparse genome representation."""

    def __init__(self, genes: Sequence[GeneSpec], settings: SearchSettings):
        self.genes = list(genes)
        self.settings = settings
        self.mutation_rate = (settings.mutation_rate
                              if settings.mutation_rate is not None
                              else 1.0 / max(1, len(self.genes)))

    def random_value(self, gene: GeneSpec, rng: random.Random):
        if gene.kind == "real":
            return rng.uniform(gene.lo, gene.hi)
        if gene.kind == "boolean":
            return rng.random() < 0.5
        return rng.choice(gene.choices)

    def random_genome(self, rng: random.Random) -> dict[str, Any]:
        lo, hi = self.settings.init_active
        k = rng.randint(lo, min(hi, len(self.genes)))
        picks = rng.sample(range(len(self.genes)), k)
        genome = {}
        for idx in picks:
            gene = self.genes[idx]
            value = self.random_value(gene, rng)
            if not self._is_baseline(gene, value):
                genome[gene.key] = value
        return genome

    def _is_baseline(self, gene: GeneSpec, value) -> bool:
        if gene.kind == "real":
            return gene.baseline is not None and abs(value - gene.baseline) < 1e-12
        return value == gene.baseline

    def crossover(self, a: dict, b: dict, rng: random.Random) -> tuple[dict, dict]:
        if rng.random() > self.settings.crossover_rate:
            return dict(a), dict(b)
        c1: dict[str, Any] = {}
        c2: dict[str, Any] = {}
        for gene in self.genes:
            va, vb = a.get(gene.key), b.get(gene.key)
            if va is None and vb is None:
                continue
            if va is not None and vb is not None and gene.kind == "real":
                x1, x2 = self._sbx(va, vb, gene, rng)
                c1[gene.key] = x1
                c2[gene.key] = x2
            else:
                # one-sided (or categorical): swap carriers half the time
                if rng.random() < 0.5:
                    va, vb = vb, va
                if va is not None:
                    c1[gene.key] = va
                if vb is not None:
                    c2[gene.key] = vb
        return c1, c2

    def _sbx(self, x1: float, x2: float, gene: GeneSpec, rng: random.Random):
        if abs(x1 - x2) < 1e-14:
            return x1, x2
        u = rng.random()
        eta = self.settings.sbx_eta
        if u <= 0.5:
            beta = (2.0 * u) ** (1.0 / (eta + 1.0))
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
        y1 = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2)
        y2 = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2)
        return (min(max(y1, gene.lo), gene.hi),
                min(max(y2, gene.lo), gene.hi))

    def mutate(self, genome: dict, rng: random.Random) -> dict:
        out = dict(genome)
        for gene in self.genes:
            if rng.random() >= self.mutation_rate:
                continue
            if gene.key in out:
                if rng.random() < self.settings.deactivate_prob:
                    del out[gene.key]
                elif gene.kind == "real":
                    out[gene.key] = self._poly_mutate(out[gene.key], gene, rng)
                else:
                    out[gene.key] = self.random_value(gene, rng)
            else:
                # Fresh activations explore the whole range; the polynomial
                # kernel only refines genes that already carry a value.
                value = self.random_value(gene, rng)
                if not self._is_baseline(gene, value):
                    out[gene.key] = value
        return out

    def _poly_mutate(self, x: float, gene: GeneSpec, rng: random.Random) -> float:
        span = gene.hi - gene.lo
        if span <= 0.0:
            return x
        u = rng.random()
        eta = self.settings.poly_eta
        if u < 0.5:
            delta = (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0
        else:
            delta = 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0))
        return min(max(x + delta * span, gene.lo), gene.hi)


def canonical(genome: dict[str, Any]) -> Genome:
    return tuple(sorted(genome.items()))


def nsga2_search(genes: Sequence[GeneSpec],
                 evaluate: Callable[[Genome], Evaluation],
                 settings: SearchSettings) -> SearchResult:
    """Run the constrained search; returns the feasible non-dominated front
    over every individual ever evaluated (empty when nothing was feasible)."""
    rng = random.Random(settings.seed)
    ops = GenomeOps(genes, settings)
    cache: dict[Genome, Evaluation] = {}
    archive: dict[Genome, Evaluation] = {}
    evaluations = 0

    def evaluate_batch(genomes: list[dict[str, Any]]) -> list[EvaluatedIndividual]:
        nonlocal evaluations
        keys = [canonical(g) for g in genomes]
        missing = []
        seen_missing = set()
        for key in keys:
            if key not in cache and key not in seen_missing:
                missing.append(key)
                seen_missing.add(key)
        if missing:
            if settings.workers > 1:
                with ProcessPoolExecutor(max_workers=settings.workers) as pool:
                    results = list(pool.map(evaluate, missing))
            else:
                results = [evaluate(key) for key in missing]
            for key, ev in zip(missing, results):
                cache[key] = ev
                evaluations += 1
                if ev.feasible:
                    archive[key] = ev
        out = []
        for key in keys:
            ev = cache[key]
            out.append(EvaluatedIndividual(genome=key, objectives=ev.objectives,
                                           feasible=ev.feasible, violation=ev.violation))
        return out

    population = evaluate_batch([ops.random_genome(rng) for _ in range(settings.population)])
    best_signature = None
    stale = 0
    generations_run = 0

    for gen in range(settings.generations):
        generations_run = gen + 1
        fronts, rank, crowd = _sort_population(population)

        def pick(i: int, j: int) -> int:
            if rank[i] != rank[j]:
                return i if rank[i] < rank[j] else j
            if crowd[i] != crowd[j]:
                return i if crowd[i] > crowd[j] else j
            return i

        offspring_genomes: list[dict[str, Any]] = []
        while len(offspring_genomes) < settings.population:
            i = pick(rng.randrange(len(population)), rng.randrange(len(population)))
            j = pick(rng.randrange(len(population)), rng.randrange(len(population)))
            g1, g2 = ops.crossover(dict(population[i].genome), dict(population[j].genome), rng)
            offspring_genomes.append(ops.mutate(g1, rng))
            if len(offspring_genomes) < settings.population:
                offspring_genomes.append(ops.mutate(g2, rng))
        offspring = evaluate_batch(offspring_genomes)

        merged = population + offspring
        fronts, rank, crowd = _sort_population(merged)
        survivors: list[EvaluatedIndividual] = []
        for front in fronts:
            if len(survivors) + len(front) <= settings.population:
                survivors.extend(merged[i] for i in front)
            else:
                remaining = settings.population - len(survivors)
                pts = [merged[i].objectives for i in front]
                dists = crowding_distances(pts)
                order = sorted(range(len(front)), key=lambda kk: -dists[kk])
                survivors.extend(merged[front[kk]] for kk in order[:remaining])
            if len(survivors) >= settings.population:
                break
        population = survivors

        # Early stop once the feasible front stops improving.
        front_now = _feasible_front(archive)
        signature = tuple(sorted((ind.genome, ind.objectives) for ind in front_now))
        if signature == best_signature:
            stale += 1
        else:
            best_signature = signature
            stale = 0
        if archive and gen + 1 >= settings.min_generations and stale >= settings.patience:
            break

    front = _feasible_front(archive)
    best_infeasible: list[EvaluatedIndividual] = []
    if not front:
        pool = [EvaluatedIndividual(genome=k, objectives=ev.objectives,
                                    feasible=ev.feasible, violation=ev.violation)
                for k, ev in cache.items()]
        pool.sort(key=lambda ind: ind.violation)
        best_infeasible = pool[:settings.population]
    return SearchResult(front=front, evaluations=evaluations,
                        feasible_count=len(archive),
                        generations_run=generations_run,
                        best_infeasible=best_infeasible)


def _feasible_front(archive: dict[Genome, Evaluation]) -> list[EvaluatedIndividual]:
    items = sorted(archive.items())
    pts = [ev.objectives for _, ev in items]
    if not pts:
        return []
    fronts = non_dominated_sort(pts)
    return [EvaluatedIndividual(genome=items[i][0], objectives=items[i][1].objectives,
                                feasible=True, violation=0.0)
            for i in fronts[0]]
