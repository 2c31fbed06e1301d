"""Multi-level Steiner tree heuristics.

Greedy path-based algorithms (``kruskal_mlst``, ``lazy_kruskal_mlst``,
``prim_mlst``, ``qos_c2a``) return ``(solution, trace)``; the Steiner-tree
compositions (``qos_c2b``, ``qos_roundup``, ``top_down``, ``bottom_up``,
``composite``) return a bare :class:`MlstSolution`.  Every output is pruned to
a tree and has its rates lowered to the least feasible values.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .graph import (
    DEFAULT_TIE_BREAK,
    InstanceError,
    MlstSolution,
    MultiLevelGraph,
    RatePath,
    TieBreak,
    finalize,
    rate_shortest_path,
    require_valid,
    shortest_path_tree,
    terminal_set,
)
from .steiner import WeightedGraph, get_heuristic, level_view

MAX_COMPOSITE_LEVELS = 12


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    terminal: int
    partner: int
    remaining: int
    connection_cost: float
    path: RatePath


@dataclass
class RunTrace:
    algorithm: str
    steps: list[TraceStep] = field(default_factory=list)
    wall_time: float = 0.0
    pre_prune_cost: float = 0.0

    @property
    def total_connection_cost(self) -> float:
        return sum(s.connection_cost for s in self.steps)


def is_proportional(g: MultiLevelGraph, tol: float = 1e-9) -> bool:
    """True when ``c_i(e) == i * c_1(e)`` for every edge and level."""
    for e in g.edges:
        c1 = e.costs[0]
        for i, c in enumerate(e.costs, start=1):
            if abs(c - i * c1) > tol * max(1.0, abs(c)):
                return False
    return True


def _install(g: MultiLevelGraph, rates: list[int], path: RatePath, rate: int) -> float:
    """Raise path edges to ``rate``; return what the upgrade cost."""
    paid = 0.0
    for eid in path.edges:
        y = rates[eid]
        if y < rate:
            paid += g.cost(eid, rate) - g.cost(eid, y)
            rates[eid] = rate
    return paid


def _pick_root(g: MultiLevelGraph, root: Optional[int]) -> int:
    ell = g.num_levels
    if root is None:
        return min(v for v, p in enumerate(g.priority) if p == ell)
    if not 0 <= root < g.num_vertices or g.priority[root] != ell:
        raise InstanceError(f"root {root} must have top priority {ell}")
    return root


def _kruskal(g: MultiLevelGraph, residual: bool, tie_break: Optional[TieBreak], tag: str):
    require_valid(g)
    tb = tie_break or DEFAULT_TIE_BREAK
    t0 = time.perf_counter()
    P = g.priority
    rates = [0] * g.num_edges
    penalty = tb.penalty_for(g, rates)
    trace = RunTrace(tag)
    S = sorted(g.terminals)
    it = 0
    while len(S) > 1:
        best = None
        for v in S:
            spt = shortest_path_tree(g, v, P[v], rates if residual else None, penalty)
            for u in S:
                if u == v or P[u] < P[v]:
                    continue
                key = (spt.dist[u], -P[v], tb.removal_key(v), tb.removal_key(u), v, u)
                if best is None or key < best[0]:
                    best = (key, spt, v, u)
        _, spt, v, u = best
        path = spt.path_to(g, u)
        paid = _install(g, rates, path, P[v])
        it += 1
        trace.steps.append(TraceStep(it, v, u, len(S), paid, path))
        S.remove(v)
    trace.pre_prune_cost = sum(g.cost(e, r) for e, r in enumerate(rates))
    sol = finalize(g, rates)
    trace.wall_time = time.perf_counter() - t0
    return sol, trace


def kruskal_mlst(g: MultiLevelGraph, tie_break: Optional[TieBreak] = None):
    """Join the pair of remaining terminals that is cheapest to connect given
    the edges already bought (upgrade costs), then retire the lower-priority one.
    """
    return _kruskal(g, True, tie_break, "kruskal")


def lazy_kruskal_mlst(g: MultiLevelGraph, tie_break: Optional[TieBreak] = None):
    """Like :func:`kruskal_mlst` but pair distances always use full edge costs."""
    return _kruskal(g, False, tie_break, "lazy-kruskal")


def prim_mlst(g: MultiLevelGraph, root: Optional[int] = None, tie_break: Optional[TieBreak] = None):
    require_valid(g)
    root = _pick_root(g, root)
    tb = tie_break or DEFAULT_TIE_BREAK
    t0 = time.perf_counter()
    P = g.priority
    rates = [0] * g.num_edges
    penalty = tb.penalty_for(g, rates)
    trace = RunTrace("prim")
    remaining = sorted((t for t in g.terminals if t != root), key=lambda t: (tb.order_key(t), t))
    it = 0
    while remaining:
        best = None
        for v in remaining:
            path = rate_shortest_path(g, v, {root}, P[v], rates, penalty)
            key = (path.connection_cost, tb.order_key(v), v)
            if best is None or key < best[0]:
                best = (key, v, path)
        _, v, path = best
        paid = _install(g, rates, path, P[v])
        it += 1
        trace.steps.append(TraceStep(it, v, root, len(remaining), paid, path))
        remaining.remove(v)
    trace.pre_prune_cost = sum(g.cost(e, r) for e, r in enumerate(rates))
    sol = finalize(g, rates)
    trace.wall_time = time.perf_counter() - t0
    return sol, trace


def qos_c2a(g: MultiLevelGraph, root: Optional[int] = None, tie_break: Optional[TieBreak] = None):
    """Attach terminals in non-increasing priority order, each by the
    cheapest path of its own rate to the tree built so far.

    The root counts as the first (free) iteration.
    """
    require_valid(g)
    root = _pick_root(g, root)
    tb = tie_break or DEFAULT_TIE_BREAK
    t0 = time.perf_counter()
    P = g.priority
    rates = [0] * g.num_edges
    penalty = tb.penalty_for(g, rates)
    trace = RunTrace("c2a")
    order = sorted((t for t in g.terminals if t != root), key=lambda t: (-P[t], tb.order_key(t), t))
    tree = {root}
    trace.steps.append(TraceStep(1, root, root, len(order) + 1, 0.0,
                                 RatePath((root,), (), P[root], 0.0, True)))
    for it, t in enumerate(order, start=2):
        path = rate_shortest_path(g, t, tree, P[t], rates, penalty)
        paid = _install(g, rates, path, P[t])
        tree.update(path.vertices)
        trace.steps.append(TraceStep(it, t, path.target, len(order) + 2 - it, paid, path))
    trace.pre_prune_cost = sum(g.cost(e, r) for e, r in enumerate(rates))
    sol = finalize(g, rates)
    trace.wall_time = time.perf_counter() - t0
    return sol, trace


def _steiner_edges(wg: WeightedGraph, terminals, steiner: str) -> frozenset[int]:
    if len(terminals) < 2:
        return frozenset()
    return get_heuristic(steiner)(wg, sorted(terminals)).edges


def _merged_levels(g: MultiLevelGraph, levels: Sequence[int], prio: Sequence[int], steiner: str) -> MlstSolution:
    """One Steiner tree per level over ``{v: prio[v] >= q}`` at costs ``c_q``;
    each edge keeps the highest level that used it."""
    rates = [0] * g.num_edges
    for q in levels:
        terms = [v for v, p in enumerate(prio) if p >= q]
        for eid in _steiner_edges(level_view(g, q), terms, steiner):
            rates[eid] = max(rates[eid], q)
    return finalize(g, rates)


def qos_c2b(g: MultiLevelGraph, steiner: str = "kruskal") -> MlstSolution:
    require_valid(g)
    return _merged_levels(g, range(1, g.num_levels + 1), g.priority, steiner)


def qos_c2(g: MultiLevelGraph, root: Optional[int] = None, steiner: str = "kruskal",
           tie_break: Optional[TieBreak] = None) -> MlstSolution:
    a, _ = qos_c2a(g, root, tie_break)
    b = qos_c2b(g, steiner)
    return a if a.cost <= b.cost else b


def round_up_level(p: int, ell: int) -> int:
    """Next power of two at or above ``p``, capped at ``ell``; 0 stays 0."""
    if p <= 0:
        return 0
    return min(ell, 1 << (p - 1).bit_length())


def _require_proportional(g: MultiLevelGraph, name: str) -> None:
    if not is_proportional(g):
        raise InstanceError(f"{name} needs proportional edge costs")


def qos_roundup(g: MultiLevelGraph, steiner: str = "kruskal") -> MlstSolution:
    require_valid(g)
    _require_proportional(g, "qos_roundup")
    ell = g.num_levels
    prio = [round_up_level(p, ell) for p in g.priority]
    levels = sorted({round_up_level(i, ell) for i in range(1, ell + 1)})
    return _merged_levels(g, levels, prio, steiner)


def _contracted_view(g: MultiLevelGraph, level: int, blob: set[int]):
    """Weighted view at ``level`` with ``blob`` merged into its smallest vertex.

    Returns the view, the representative and a view-edge -> graph-edge map.
    Parallel edges keep the cheapest (then lowest id) copy.
    """
    rep = min(blob)
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for eid, e in enumerate(g.edges):
        u = rep if e.u in blob else e.u
        v = rep if e.v in blob else e.v
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        c = e.costs[level - 1]
        if key not in best or (c, eid) < best[key]:
            best[key] = (c, eid)
    keys = sorted(best, key=lambda k: best[k][1])
    wg = WeightedGraph(g.num_vertices, tuple((u, v, best[(u, v)][0]) for u, v in keys))
    return wg, rep, [best[k][1] for k in keys]


def _top_down(g: MultiLevelGraph, prio: Sequence[int], levels_desc: Sequence[int], steiner: str) -> MlstSolution:
    rates = [0] * g.num_edges
    blob: set[int] = set()
    for q in levels_desc:
        group = {v for v, p in enumerate(prio) if p == q}
        if not group:
            continue
        if not blob:
            wg, terms, back = level_view(g, q), group, None
        else:
            wg, rep, back = _contracted_view(g, q, blob)
            terms = {rep} | (group - blob)
        for veid in _steiner_edges(wg, terms, steiner):
            eid = veid if back is None else back[veid]
            rates[eid] = max(rates[eid], q)
            e = g.edges[eid]
            blob.update((e.u, e.v))
        blob.update(group)
    return finalize(g, rates)


def top_down(g: MultiLevelGraph, steiner: str = "kruskal") -> MlstSolution:
    """Steiner tree on the top-priority terminals, then per lower level a tree
    on that level's terminals with everything built so far contracted to a point."""
    require_valid(g)
    return _top_down(g, g.priority, range(g.num_levels, 0, -1), steiner)


def bottom_up(g: MultiLevelGraph, steiner: str = "kruskal") -> MlstSolution:
    require_valid(g)
    ell = g.num_levels
    rates = [0] * g.num_edges
    for eid in _steiner_edges(level_view(g, ell), g.terminals, steiner):
        rates[eid] = ell
    return finalize(g, rates)


def composite(g: MultiLevelGraph, steiner: str = "kruskal",
              max_levels: int = MAX_COMPOSITE_LEVELS) -> MlstSolution:
    """Best top-down run over every level subset that contains the top level,
    with priorities rounded up into the subset."""
    require_valid(g)
    _require_proportional(g, "composite")
    ell = g.num_levels
    if ell > max_levels:
        raise InstanceError(f"composite enumerates 2^(ell-1) subsets; ell={ell} exceeds cap {max_levels}")
    best = None
    lower = list(range(1, ell))
    for k in range(len(lower), -1, -1):
        for subset in itertools.combinations(lower, k):
            q_levels = sorted(subset) + [ell]
            prio = [0 if p == 0 else min(q for q in q_levels if q >= p) for p in g.priority]
            sol = _top_down(g, prio, q_levels[::-1], steiner)
            if best is None or sol.cost < best.cost:
                best = sol
    return best


def harmonic(k: int) -> float:
    return sum(1.0 / i for i in range(1, k + 1))


def approximation_bound(name: str, g: MultiLevelGraph) -> Optional[float]:
    """Proven cost/OPT factor for ``name`` on ``g`` with the 2-approx Steiner
    subroutine, or None where no bound is claimed."""
    t = len(g.terminals)
    ell = g.num_levels
    if name in ("kruskal", "lazy-kruskal"):
        return 2 * (harmonic(t) - 1)
    if name == "c2a":
        return 2 * (math.log(t) + 1)
    if name in ("c2b", "bottomup"):
        return 2.0 * ell
    if name == "c2":
        return min(2 * (math.log(t) + 1), 2.0 * ell)
    if name == "roundup":
        return 8.0
    if name == "topdown":
        return ell + 1.0
    if name.startswith("steiner-"):
        return 2 * (1 - 1 / t)
    return None


def _steiner_solution(g: MultiLevelGraph, steiner: str) -> MlstSolution:
    if g.num_levels != 1:
        raise InstanceError("single-level Steiner heuristics need ell = 1")
    require_valid(g)
    rates = [0] * g.num_edges
    for eid in _steiner_edges(level_view(g, 1), g.terminals, steiner):
        rates[eid] = 1
    return finalize(g, rates)


# name -> callable(g, root, tie_break) returning (solution, trace-or-None)
ALGORITHMS: dict[str, Callable] = {
    "kruskal": lambda g, root=None, tb=None: kruskal_mlst(g, tb),
    "lazy-kruskal": lambda g, root=None, tb=None: lazy_kruskal_mlst(g, tb),
    "prim": lambda g, root=None, tb=None: prim_mlst(g, root, tb),
    "c2a": lambda g, root=None, tb=None: qos_c2a(g, root, tb),
    "c2b": lambda g, root=None, tb=None: (qos_c2b(g), None),
    "c2": lambda g, root=None, tb=None: (qos_c2(g, root, tie_break=tb), None),
    "roundup": lambda g, root=None, tb=None: (qos_roundup(g), None),
    "topdown": lambda g, root=None, tb=None: (top_down(g), None),
    "bottomup": lambda g, root=None, tb=None: (bottom_up(g), None),
    "composite": lambda g, root=None, tb=None: (composite(g), None),
    "steiner-kruskal": lambda g, root=None, tb=None: (_steiner_solution(g, "kruskal"), None),
    "steiner-prim": lambda g, root=None, tb=None: (_steiner_solution(g, "prim"), None),
    "steiner-mst": lambda g, root=None, tb=None: (_steiner_solution(g, "mst"), None),
}

PROPORTIONAL_ONLY = frozenset({"roundup", "composite"})


def run_algorithm(name: str, g: MultiLevelGraph, root: Optional[int] = None,
                  tie_break: Optional[TieBreak] = None):
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(g, root, tie_break)


__all__ = [
    "ALGORITHMS", "PROPORTIONAL_ONLY", "RunTrace", "TraceStep", "approximation_bound", "bottom_up",
    "composite", "harmonic", "is_proportional", "kruskal_mlst", "lazy_kruskal_mlst", "prim_mlst",
    "qos_c2", "qos_c2a", "qos_c2b", "qos_roundup", "round_up_level", "run_algorithm", "terminal_set",
    "top_down",
]
