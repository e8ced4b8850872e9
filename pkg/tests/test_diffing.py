import math
import random

import pytest

from crashlab.ads.graph import ModuleGraph, extract_module_graph
from crashlab.diffing import (DiffSeries, LocalizationError, NoAccidentSignature,
                              default_penalty, locate_from_change_times,
                              locate_deviating_module, pelt_change_points,
                              series_change_points, tree_diff_ratio)
from crashlab.messages import Leaf, Node, leaf, list_node, node


# --- independent oracles -----------------------------------------------------

def oracle_diff(a, b, tol=1e-9):
    """Literal restatement of the recursive definition, kept separate from
    the implementation on purpose."""
    a_children = () if isinstance(a, Leaf) else a.children
    b_children = () if isinstance(b, Leaf) else b.children
    if len(a_children) == 0 and len(b_children) == 0:
        if isinstance(a, Leaf) != isinstance(b, Leaf):
            return 1.0
        if isinstance(a, Leaf):
            va, vb = a.value, b.value
            if isinstance(va, bool) or isinstance(vb, bool):
                return 0.0 if (isinstance(va, bool) and isinstance(vb, bool)
                               and va is vb) else 1.0
            if isinstance(va, (int, float)) and isinstance(vb, (int, float)):
                return 0.0 if abs(float(va) - float(vb)) <= tol else 1.0
            return 0.0 if va == vb else 1.0
        return 0.0
    if len(a_children) != len(b_children):
        return 1.0
    return sum(oracle_diff(x[1], y[1]) for x, y in zip(a_children, b_children)) \
        / len(a_children)


def oracle_partition(values, penalty):
    """Exact O(n^2) optimal-partition dynamic program (no pruning)."""
    n = len(values)
    csum = [0.0]
    csum2 = [0.0]
    for v in values:
        csum.append(csum[-1] + v)
        csum2.append(csum2[-1] + v * v)

    def cost(i, j):
        s = csum[j] - csum[i]
        s2 = csum2[j] - csum2[i]
        return s2 - s * s / (j - i)

    best = [0.0] * (n + 1)
    best[0] = -penalty
    prev = [0] * (n + 1)
    for j in range(1, n + 1):
        bv, bi = None, 0
        for i in range(j):
            val = best[i] + cost(i, j) + penalty
            if bv is None or val < bv:
                bv, bi = val, i
        best[j] = bv
        prev[j] = bi
    out = []
    j = n
    while j > 0:
        i = prev[j]
        if i > 0:
            out.append(i)
        j = i
    return sorted(out)


def random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.35:
        pick = rng.random()
        if pick < 0.5:
            return leaf(rng.choice([0.0, 0.1, 1.5, -2.0, 3.14159, 7]))
        if pick < 0.8:
            return leaf(rng.choice(["a", "b", "lane_0", "yield"]))
        return leaf(rng.choice([True, False]))
    n_children = rng.randint(1, 4)
    return Node(tuple((f"c{i}", random_tree(rng, depth - 1))
                      for i in range(n_children)))


def perturb_tree(rng, tree):
    """Random structural or leaf edit of a copy of the tree."""
    if isinstance(tree, Leaf) or rng.random() < 0.2:
        return random_tree(rng, 2)
    children = list(tree.children)
    idx = rng.randrange(len(children))
    label, sub = children[idx]
    if rng.random() < 0.15:
        children.append((f"x{len(children)}", random_tree(rng, 1)))
    else:
        children[idx] = (label, perturb_tree(rng, sub))
    return Node(tuple(children))


# --- tree diff ratio ---------------------------------------------------------

class TestTreeDiffRatio:
    def test_identical_trees_are_zero(self):
        t = node(("a", leaf(1)), ("b", node(("c", leaf("x")))))
        assert tree_diff_ratio(t, t) == 0.0

    def test_unequal_leaves(self):
        assert tree_diff_ratio(leaf(3), leaf(4)) == 1.0

    def test_child_count_mismatch(self):
        two = list_node("c", [leaf(1), leaf(2)])
        three = list_node("c", [leaf(1), leaf(2), leaf(3)])
        assert tree_diff_ratio(two, three) == 1.0

    def test_nested_mean(self):
        # node[same leaf, node of three with one differing leaf] -> 1/6
        a = node(("a", leaf(5)), ("b", list_node("c", [leaf(1), leaf(2), leaf(3)])))
        b = node(("a", leaf(5)), ("b", list_node("c", [leaf(1), leaf(2), leaf(9)])))
        assert tree_diff_ratio(a, b) == pytest.approx(1.0 / 6.0)

    def test_numeric_tolerance(self):
        assert tree_diff_ratio(leaf(0.1), leaf(0.1 + 1e-12)) == 0.0
        assert tree_diff_ratio(leaf(0.1), leaf(0.1 + 1e-6)) == 1.0

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(7)
        for _ in range(400):
            a = random_tree(rng, 4)
            b = perturb_tree(rng, a) if rng.random() < 0.7 else random_tree(rng, 4)
            got = tree_diff_ratio(a, b)
            assert got == oracle_diff(a, b)
            assert got == tree_diff_ratio(b, a)  # symmetry
            assert 0.0 <= got <= 1.0


# --- PELT --------------------------------------------------------------------

class TestPelt:
    def test_constant_series_has_no_change_points(self):
        assert pelt_change_points([0.3] * 50) == []

    def test_single_step(self):
        values = [0.0] * 50 + [0.5] * 50
        cps = pelt_change_points(values)
        assert len(cps) == 1
        assert abs(cps[0] - 50) <= 1

    def test_matches_exact_partition_dp(self):
        rng = random.Random(11)
        for trial in range(50):
            n = rng.randint(20, 160)
            shifts = rng.randint(0, 3)
            values = []
            level = rng.uniform(0.0, 0.5)
            bounds = sorted(rng.sample(range(5, max(6, n - 5)), shifts)) + [n]
            start = 0
            for b in bounds:
                values.extend(level + rng.gauss(0.0, 0.05) for _ in range(b - start))
                level += rng.choice([-1, 1]) * rng.uniform(0.2, 0.6)
                start = b
            penalty = default_penalty(values)
            if penalty == float("inf"):
                continue
            assert pelt_change_points(values, penalty) == \
                oracle_partition(values, penalty)

    def test_explicit_penalty_controls_sensitivity(self):
        values = [0.0] * 30 + [0.2] * 30
        assert pelt_change_points(values, penalty=0.05) == [30]
        assert pelt_change_points(values, penalty=1e9) == []

    def test_appendix_style_series(self):
        # Mean shift 12.84 -> 17.44 at 7.0 s on a 0.1 s grid with small noise.
        rng = random.Random(3)
        times = [round(i * 0.1, 3) for i in range(120)]
        values = [12.84 + rng.gauss(0, 0.3) if t < 7.0 else 17.44 + rng.gauss(0, 0.3)
                  for t in times]
        series = DiffSeries(channel="planning", times=tuple(times), values=tuple(values))
        cps = series_change_points(series)
        assert cps.times, "expected a change point"
        assert abs(cps.times[0] - 7.0) <= 0.2
        assert cps.mean_before == pytest.approx(12.84, abs=0.3)
        assert cps.mean_after == pytest.approx(17.44, abs=0.3)


# --- deviating-module localization -------------------------------------------

def apollo_shape_graph() -> ModuleGraph:
    """Four modules in a chain; chassis read by planning and control."""
    return ModuleGraph(
        modules=("perception", "prediction", "planning", "control"),
        channels=("perception/obstacles", "prediction", "planning", "control",
                  "chassis"),
        writes=(
            ("perception", "perception/obstacles"),
            ("prediction", "prediction"),
            ("planning", "planning"),
            ("control", "control"),
        ),
        reads=(
            ("perception/obstacles", "prediction"),
            ("prediction", "planning"),
            ("chassis", "planning"),
            ("planning", "control"),
            ("chassis", "control"),
        ),
    )


class TestLocalization:
    def test_reference_change_times_identify_prediction(self):
        g = apollo_shape_graph()
        times = {"chassis": 1.5, "prediction": 4.5, "planning": 7.0,
                 "control": 7.1, "perception/obstacles": float("inf")}
        result = locate_from_change_times(g, times, reaction_window=3.0)
        assert result.module == "prediction"
        assert ("channel:chassis", "module:control") in result.pruned_edges
        assert set(result.reachable_modules) == {"prediction", "planning", "control"}

    def test_single_module_chain(self):
        g = ModuleGraph(modules=("control",), channels=("control",),
                        writes=(("control", "control"),), reads=())
        result = locate_from_change_times(g, {"control": 2.0})
        assert result.module == "control"

    def test_all_channels_silent_except_control(self):
        g = apollo_shape_graph()
        times = {ch: float("inf") for ch in g.channels}
        times["control"] = 5.0
        result = locate_from_change_times(g, times)
        assert result.module == "control"
        assert result.reachable_modules == ("control",)

    def test_no_control_change_raises(self):
        g = apollo_shape_graph()
        times = {ch: float("inf") for ch in g.channels}
        with pytest.raises(NoAccidentSignature):
            locate_from_change_times(g, times)

    def test_window_monotonicity(self):
        # Enlarging the reaction window never prunes an edge a smaller window kept.
        g = apollo_shape_graph()
        times = {"chassis": 1.5, "prediction": 4.5, "planning": 7.0,
                 "control": 7.1, "perception/obstacles": 2.0}
        small = locate_from_change_times(g, times, reaction_window=2.0)
        large = locate_from_change_times(g, times, reaction_window=6.0)
        assert set(large.pruned_edges) <= set(small.pruned_edges)

    def test_locate_over_series(self):
        g = apollo_shape_graph()
        n = 120
        dt = 0.1

        def series(channel, jump_at, base=0.0, after=0.6):
            times = tuple(round(i * dt, 3) for i in range(n))
            values = tuple(base if t < jump_at else after for t in times)
            return DiffSeries(channel=channel, times=times, values=values)

        channel_series = {
            "perception/obstacles": series("perception/obstacles", 99.0),  # flat
            "prediction": series("prediction", 4.5),
            "planning": series("planning", 7.0),
            "control": series("control", 7.1),
            "chassis": series("chassis", 1.5),
        }
        result = locate_deviating_module(g, channel_series, reaction_window=3.0)
        assert result.module == "prediction"
