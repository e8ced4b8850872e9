"""Differential analysis of two execution records.

Per channel, the k-th messages of both records are compared with a
structural tree-diff ratio in [0, 1]; PELT change-point detection then finds
where each channel's series shifts beyond its early-run baseline noise, and
a pruned walk of the module/channel graph from the control channel names the
module whose output deviated first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .ads.graph import CH_CONTROL, ModuleGraph
from .messages import Leaf, Node, Tree
from .recording import ExecutionRecord

NUMERIC_TOLERANCE = 1e-9
DEFAULT_REACTION_WINDOW = 3.0
# Ticks to drop from the head of every series: the module pipeline is one
# tick deep per stage, so the first few messages carry start-up defaults
# whose first real payload would otherwise register as a change point.
WARMUP_TICKS = 4


class DiffError(ValueError):
    pass


class NoAccidentSignature(RuntimeError):
    """The control channel never shifts: the two executions do not disagree
    about what the ego did, so there is nothing to localize."""


class LocalizationError(RuntimeError):
    def __init__(self, message: str, pruned_edges=()):
        super().__init__(message)
        self.pruned_edges = tuple(pruned_edges)


def _leaves_equal(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b if isinstance(a, bool) and isinstance(b, bool) else False
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(float(a) - float(b)) <= NUMERIC_TOLERANCE
    return a == b


def tree_diff_ratio(a: Tree, b: Tree) -> float:
    """Structural difference of two message trees, from 0 (same) to 1.

    Leaves compare by value (numerics within tolerance); nodes with unequal
    child counts count as fully different; otherwise the ratio is the mean
    over positionally paired children.
    """
    a_leaf, b_leaf = isinstance(a, Leaf), isinstance(b, Leaf)
    na = 0 if a_leaf else len(a.children)
    nb = 0 if b_leaf else len(b.children)
    if na == 0 and nb == 0:
        if a_leaf != b_leaf:
            return 1.0
        if a_leaf:
            return 0.0 if _leaves_equal(a.value, b.value) else 1.0
        return 0.0  # two childless nodes carry no differing content
    if na != nb:
        return 1.0
    total = 0.0
    for (_, sub_a), (_, sub_b) in zip(a.children, b.children):
        total += tree_diff_ratio(sub_a, sub_b)
    return total / na


@dataclass(frozen=True)
class DiffSeries:
    channel: str
    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise DiffError("times and values must align")


def channel_diff_series(rec_a: ExecutionRecord, rec_b: ExecutionRecord,
                        channel: str, skip_warmup: bool = True) -> DiffSeries:
    """Per-timestamp diff ratio for one channel, messages paired by sequence
    index and truncated to the shorter record."""
    msgs_a = rec_a.channels.get(channel)
    msgs_b = rec_b.channels.get(channel)
    if not msgs_a or not msgs_b:
        raise DiffError(f"channel {channel!r} missing from a record")
    n = min(len(msgs_a), len(msgs_b))
    start = WARMUP_TICKS if skip_warmup and n > 2 * WARMUP_TICKS else 0
    times = tuple(msgs_a[i].timestamp for i in range(start, n))
    values = tuple(tree_diff_ratio(msgs_a[i].tree, msgs_b[i].tree)
                   for i in range(start, n))
    return DiffSeries(channel=channel, times=times, values=values)


def all_channel_series(rec_a: ExecutionRecord, rec_b: ExecutionRecord,
                       channels: Sequence[str]) -> dict[str, DiffSeries]:
    return {ch: channel_diff_series(rec_a, rec_b, ch) for ch in channels}


# --- PELT change point detection -------------------------------------------

def default_penalty(values: Sequence[float]) -> float:
    """BIC-style penalty scaled by the early-window noise level.

    The first fifth of the series is taken as baseline noise; when it is
    flat the whole-series variance stands in, and a constant series yields
    no change points at all.
    """
    n = len(values)
    if n < 2:
        return float("inf")
    head = values[:max(2, n // 5)]
    var = _variance(head)
    if var <= 1e-12:
        var = _variance(values)
    if var <= 1e-12:
        return float("inf")
    return 2.0 * var * math.log(n)


def _variance(xs: Sequence[float]) -> float:
    n = len(xs)
    mean = sum(xs) / n
    return sum((x - mean) ** 2 for x in xs) / n


def pelt_change_points(values: Sequence[float],
                       penalty: Optional[float] = None) -> list[int]:
    """Optimal mean-shift segmentation under a squared-error cost.

    Returns the sorted indices at which new segments start (0 excluded).
    Exactly minimizes sum of segment SSEs plus penalty per change point,
    with PELT pruning of candidate segment starts.
    """
    n = len(values)
    if n < 2:
        return []
    if penalty is None:
        penalty = default_penalty(values)
    if penalty == float("inf"):
        return []
    csum = [0.0]
    csum2 = [0.0]
    for v in values:
        csum.append(csum[-1] + v)
        csum2.append(csum2[-1] + v * v)

    def cost(i: int, j: int) -> float:
        # SSE of values[i:j] about its mean.
        s = csum[j] - csum[i]
        s2 = csum2[j] - csum2[i]
        m = j - i
        return s2 - s * s / m

    best = [0.0] * (n + 1)
    best[0] = -penalty
    prev = [0] * (n + 1)
    candidates = [0]
    for j in range(1, n + 1):
        best_val = None
        best_i = 0
        for i in candidates:
            val = best[i] + cost(i, j) + penalty
            if best_val is None or val < best_val:
                best_val = val
                best_i = i
        best[j] = best_val
        prev[j] = best_i
        candidates = [i for i in candidates if best[i] + cost(i, j) <= best[j]]
        candidates.append(j)

    changes = []
    j = n
    while j > 0:
        i = prev[j]
        if i > 0:
            changes.append(i)
        j = i
    changes.reverse()
    return changes


@dataclass(frozen=True)
class ChannelChangePoints:
    channel: str
    times: tuple[float, ...]
    mean_before: Optional[float]
    mean_after: Optional[float]


def series_change_points(series: DiffSeries,
                         penalty: Optional[float] = None) -> ChannelChangePoints:
    idx = pelt_change_points(series.values, penalty)
    times = tuple(series.times[i] for i in idx)
    if idx:
        first = idx[0]
        mean_before = sum(series.values[:first]) / first
        mean_after = sum(series.values[first:]) / (len(series.values) - first)
    else:
        mean_before = mean_after = None
    return ChannelChangePoints(channel=series.channel, times=times,
                               mean_before=mean_before, mean_after=mean_after)


# --- deviating-module localization ------------------------------------------

@dataclass(frozen=True)
class LocalizationResult:
    module: str
    module_change_times: Mapping[str, float]
    channel_change_times: Mapping[str, float]
    pruned_edges: tuple[tuple[str, str], ...]
    reachable_modules: tuple[str, ...]


def locate_deviating_module(graph: ModuleGraph,
                            channel_series: Mapping[str, DiffSeries],
                            reaction_window: float = DEFAULT_REACTION_WINDOW,
                            penalty: Optional[float] = None) -> LocalizationResult:
    """Pinpoint the module whose channel output deviated first.

    Change times feed an edge-consistency prune (an edge survives only when
    its source shifted within `reaction_window` *before* its sink), then the
    earliest-shifting module reachable backwards from the control channel is
    returned.
    """
    change_times: dict[str, float] = {}
    for ch in graph.channels:
        series = channel_series.get(ch)
        if series is None:
            change_times[ch] = float("inf")
            continue
        cps = series_change_points(series, penalty)
        change_times[ch] = cps.times[0] if cps.times else float("inf")
    return locate_from_change_times(graph, change_times, reaction_window)


def locate_from_change_times(graph: ModuleGraph,
                             channel_change_times: Mapping[str, float],
                             reaction_window: float = DEFAULT_REACTION_WINDOW
                             ) -> LocalizationResult:
    # Modules and channels may share names; tag them to a single node space.
    ch_t: dict[str, float] = {}
    for ch in graph.channels:
        ch_t[ch] = channel_change_times.get(ch, float("inf"))
    mod_t: dict[str, float] = {}
    for module in graph.modules:
        outputs = graph.outputs_of(module)
        mod_t[module] = min((ch_t[c] for c in outputs), default=float("inf"))

    if CH_CONTROL not in graph.channels:
        raise LocalizationError("graph has no control channel")
    if math.isinf(ch_t[CH_CONTROL]):
        raise NoAccidentSignature(
            "control channel has no change point; executions agree on the ego")

    def within(tu: float, tv: float) -> bool:
        # t*(source) must fall in [t*(sink) - window, t*(sink)]; two silent
        # endpoints (both infinite) stay connected.
        if math.isinf(tu) and math.isinf(tv):
            return True
        return tv - reaction_window <= tu <= tv

    edges = [(("module", m), ("channel", c)) for m, c in graph.writes]
    edges += [(("channel", c), ("module", m)) for c, m in graph.reads]
    t_of = {("module", m): mod_t[m] for m in graph.modules}
    t_of.update({("channel", c): ch_t[c] for c in graph.channels})

    kept, pruned = [], []
    for u, v in edges:
        (kept if within(t_of[u], t_of[v]) else pruned).append((u, v))

    # Walk the reversed pruned graph from the control channel.
    reverse: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for u, v in kept:
        reverse.setdefault(v, []).append(u)
    start = ("channel", CH_CONTROL)
    seen = {start}
    stack = [start]
    while stack:
        current = stack.pop()
        for upstream in reverse.get(current, ()):
            if upstream not in seen:
                seen.add(upstream)
                stack.append(upstream)
    reachable = tuple(m for m in graph.modules if ("module", m) in seen)
    pruned_named = tuple((f"{uk}:{un}", f"{vk}:{vn}") for (uk, un), (vk, vn) in pruned)
    if not reachable:
        raise LocalizationError(
            "no module reaches the control channel after pruning",
            pruned_edges=pruned_named)
    module = min(reachable, key=lambda m: (mod_t[m], m))
    return LocalizationResult(
        module=module,
        module_change_times=dict(mod_t),
        channel_change_times=dict(ch_t),
        pruned_edges=pruned_named,
        reachable_modules=reachable,
    )
