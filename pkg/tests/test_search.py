import itertools
import random

import pytest

from crashlab.search import (Evaluation, GeneSpec, SearchSettings,
                             crowding_distances, dominates, non_dominated_sort,
                             nsga2_search)


def brute_force_fronts(points):
    """Peel non-dominated layers by direct pairwise comparison."""
    remaining = set(range(len(points)))
    fronts = []
    while remaining:
        layer = [p for p in remaining
                 if not any(dominates(points[q], points[p])
                            for q in remaining if q != p)]
        fronts.append(sorted(layer))
        remaining -= set(layer)
    return fronts


class TestNonDominatedSort:
    def test_two_by_two_grid(self):
        pts = [(1, 1), (1, 2), (2, 1), (2, 2)]
        fronts = [sorted(f) for f in non_dominated_sort(pts)]
        assert fronts == [[0], [1, 2], [3]]

    def test_matches_brute_force_on_random_populations(self):
        rng = random.Random(5)
        for _ in range(100):
            n = rng.randint(1, 20)
            m = rng.randint(1, 4)
            pts = [tuple(rng.randint(0, 6) for _ in range(m)) for _ in range(n)]
            got = [sorted(f) for f in non_dominated_sort(pts)]
            assert got == brute_force_fronts(pts)


class TestCrowding:
    def test_boundary_points_get_infinity(self):
        pts = [(0.0, 3.0), (1.0, 2.0), (2.0, 1.0), (3.0, 0.0)]
        d = crowding_distances(pts)
        assert d[0] == float("inf")
        assert d[3] == float("inf")
        assert all(x > 0 for x in d)

    def test_duplicate_objectives(self):
        pts = [(1.0, 1.0), (1.0, 1.0)]
        d = crowding_distances(pts)
        assert all(x == float("inf") for x in d)


GENES = [
    GeneSpec(key="a", kind="real", lo=0.0, hi=10.0, baseline=5.0),
    GeneSpec(key="b", kind="real", lo=0.0, hi=10.0, baseline=5.0),
    GeneSpec(key="flip", kind="boolean", baseline=False),
]


def _toy_evaluate(genome):
    """Feasible iff gene 'a' exceeds 7; objectives reward small deltas."""
    values = dict(genome)
    a = values.get("a", 5.0)
    cost = float(len(values)) + sum(
        abs(v - 5.0) / 10.0 for k, v in values.items() if k != "flip")
    return Evaluation(objectives=(cost, abs(a - 8.0)), feasible=a > 7.0,
                      violation=max(0.0, 7.0 - a))


class TestEngine:
    def test_finds_feasible_front(self):
        settings = SearchSettings(population=12, generations=10, seed=1)
        result = nsga2_search(GENES, _toy_evaluate, settings)
        assert result.found_feasible
        for ind in result.front:
            assert dict(ind.genome).get("a", 5.0) > 7.0

    def test_front_is_mutually_non_dominated(self):
        settings = SearchSettings(population=12, generations=10, seed=2)
        result = nsga2_search(GENES, _toy_evaluate, settings)
        pts = [ind.objectives for ind in result.front]
        for i, j in itertools.permutations(range(len(pts)), 2):
            assert not dominates(pts[i], pts[j])

    def test_deterministic_for_fixed_seed(self):
        settings = SearchSettings(population=12, generations=8, seed=3)
        r1 = nsga2_search(GENES, _toy_evaluate, settings)
        r2 = nsga2_search(GENES, _toy_evaluate, settings)
        assert [(i.genome, i.objectives) for i in r1.front] == \
            [(i.genome, i.objectives) for i in r2.front]
        assert r1.evaluations == r2.evaluations

    def test_seed_changes_trajectory(self):
        a = nsga2_search(GENES, _toy_evaluate,
                         SearchSettings(population=12, generations=6, seed=4))
        b = nsga2_search(GENES, _toy_evaluate,
                         SearchSettings(population=12, generations=6, seed=5))
        # Not a strict requirement, but identical histories would point at a
        # seeding bug.
        assert a.evaluations > 0 and b.evaluations > 0

    def test_infeasible_problem_reports_best_violations(self):
        def never_feasible(genome):
            values = dict(genome)
            a = values.get("a", 5.0)
            return Evaluation(objectives=(1.0, 1.0), feasible=False,
                              violation=10.0 - a)

        result = nsga2_search(GENES, never_feasible,
                              SearchSettings(population=8, generations=4, seed=0))
        assert not result.found_feasible
        assert result.best_infeasible
        violations = [ind.violation for ind in result.best_infeasible]
        assert violations == sorted(violations)

    def test_parallel_matches_serial(self):
        serial = nsga2_search(GENES, _toy_evaluate,
                              SearchSettings(population=8, generations=4, seed=7,
                                             workers=1))
        parallel = nsga2_search(GENES, _toy_evaluate,
                                SearchSettings(population=8, generations=4, seed=7,
                                               workers=2))
        assert [(i.genome, i.objectives) for i in serial.front] == \
            [(i.genome, i.objectives) for i in parallel.front]

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            SearchSettings(population=7)
        with pytest.raises(ValueError):
            SearchSettings(crossover_rate=1.5)
