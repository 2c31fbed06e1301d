"""Instance and solution model for multi-level Steiner trees.

A :class:`MultiLevelGraph` is an undirected graph whose edges carry one cost
per level, plus a priority for every vertex (0 marks a non-terminal).  A
:class:`MlstSolution` assigns every edge a rate in ``0..ell`` (0 = unused).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

TOL = 1e-9


class InstanceError(ValueError):
    """Raised when an operation receives an instance it cannot work on."""


class SolutionError(ValueError):
    """Raised for malformed or infeasible rate assignments."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    costs: tuple[float, ...]

    def other(self, x: int) -> int:
        return self.v if x == self.u else self.u


@dataclass(frozen=True)
class MultiLevelGraph:
    num_vertices: int
    edges: tuple[Edge, ...]
    num_levels: int
    priority: tuple[int, ...]

    @classmethod
    def build(cls, num_vertices: int, edges: Iterable, num_levels: int,
              priority) -> "MultiLevelGraph":
        """Construct from loose inputs.

        ``edges`` holds ``(u, v, costs)`` triples; ``priority`` is either a
        dense sequence or a ``{vertex: level}`` mapping (missing = 0).
        """
        es = tuple(Edge(int(u), int(v), tuple(float(c) for c in cs)) for u, v, cs in edges)
        if isinstance(priority, dict):
            pr = [0] * num_vertices
            for v, p in priority.items():
                pr[int(v)] = int(p)
        else:
            pr = [int(p) for p in priority]
        return cls(int(num_vertices), es, int(num_levels), tuple(pr))

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per vertex, the ``(neighbor, edge_id)`` pairs in edge-id order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for eid, e in enumerate(self.edges):
            adj[e.u].append((e.v, eid))
            adj[e.v].append((e.u, eid))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def terminals(self) -> tuple[int, ...]:
        return tuple(v for v, p in enumerate(self.priority) if p > 0)

    def cost(self, eid: int, rate: int) -> float:
        """Cost of edge ``eid`` installed at ``rate``; rate 0 costs nothing."""
        if rate == 0:
            return 0.0
        return self.edges[eid].costs[rate - 1]

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class MlstSolution:
    rates: tuple[int, ...]
    cost: float

    @classmethod
    def from_rates(cls, g: MultiLevelGraph, rates: Sequence[int]) -> "MlstSolution":
        rates = tuple(int(r) for r in rates)
        return cls(rates, cost_of_rates(g, rates))

    @classmethod
    def empty(cls, g: MultiLevelGraph) -> "MlstSolution":
        return cls((0,) * g.num_edges, 0.0)

    def used_edges(self) -> list[int]:
        return [eid for eid, r in enumerate(self.rates) if r > 0]


@dataclass(frozen=True)
class RatePath:
    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    rate: int
    connection_cost: float
    residual: bool

    @property
    def source(self) -> int:
        return self.vertices[0]

    @property
    def target(self) -> int:
        return self.vertices[-1]


# Called as penalty(edge_id, entered_vertex) inside Dijkstra; smaller wins on cost ties.
PathPenalty = Callable[[int, int], float]


def _identity(v: int) -> int:
    return v


@dataclass(frozen=True)
class TieBreak:
    """Hooks that decide between equal-cost choices.

    ``order_key`` sequences terminals of equal priority (C2a, Prim),
    ``removal_key`` picks which endpoint a Kruskal step retires, and
    ``path_penalty(g, rates, edge_id, vertex)`` is a secondary path weight
    compared only when two paths cost exactly the same.  The defaults give
    the lower-vertex-index rule.
    """

    order_key: Callable[[int], object] = _identity
    removal_key: Callable[[int], object] = _identity
    path_penalty: Optional[Callable[[MultiLevelGraph, Sequence[int], int, int], float]] = None

    def penalty_for(self, g: MultiLevelGraph, rates: Sequence[int]) -> Optional[PathPenalty]:
        if self.path_penalty is None:
            return None
        pp = self.path_penalty
        return lambda eid, w: pp(g, rates, eid, w)


DEFAULT_TIE_BREAK = TieBreak()


class DisjointSet:
    """Union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


# --------------------------------------------------------------------------
# instance checks


def validate_instance(g: MultiLevelGraph) -> list[str]:
    """Return human-readable violations; an empty list means the instance is usable."""
    out: list[str] = []
    n, ell = g.num_vertices, g.num_levels
    if ell < 1:
        out.append(f"number of levels must be >= 1, got {ell}")
    if len(g.priority) != n:
        out.append(f"priority vector has length {len(g.priority)}, expected {n}")
    seen: dict[tuple[int, int], int] = {}
    for eid, e in enumerate(g.edges):
        if not (0 <= e.u < n and 0 <= e.v < n):
            out.append(f"edge {eid} has endpoint out of range")
            continue
        if e.u == e.v:
            out.append(f"self-loop at edge {eid} (vertex {e.u})")
        key = (min(e.u, e.v), max(e.u, e.v))
        if key in seen:
            out.append(f"edge {eid} duplicates edge {seen[key]} ({key[0]}-{key[1]})")
        else:
            seen[key] = eid
        if len(e.costs) != ell:
            out.append(f"edge {eid} has {len(e.costs)} costs, expected {ell}")
            continue
        for i, c in enumerate(e.costs, start=1):
            if c < 0 or math.isnan(c):
                out.append(f"negative cost at edge {eid}, level {i}")
        for i in range(1, len(e.costs)):
            if e.costs[i] < e.costs[i - 1] - TOL:
                out.append(f"cost chain broken at edge {eid}, level {i + 1}")
    for v, p in enumerate(g.priority):
        if not 0 <= p <= ell:
            out.append(f"vertex {v} has priority {p} outside 0..{ell}")
    if ell >= 1 and ell not in g.priority:
        out.append(f"no vertex has top priority {ell}")
    if n > 0 and all(0 <= e.u < n and 0 <= e.v < n for e in g.edges):
        ds = DisjointSet(n)
        for e in g.edges:
            ds.union(e.u, e.v)
        comps = {ds.find(v) for v in range(n)}
        if len(comps) > 1:
            out.append(f"graph is disconnected ({len(comps)} components)")
    if n == 0:
        out.append("graph has no vertices")
    return out


def require_valid(g: MultiLevelGraph) -> None:
    problems = validate_instance(g)
    if problems:
        raise InstanceError("invalid instance: " + "; ".join(problems))


def terminal_set(g: MultiLevelGraph, level: int) -> set[int]:
    """Terminals whose priority is at least ``level``."""
    if not 1 <= level <= g.num_levels:
        raise ValueError(f"level {level} outside 1..{g.num_levels}")
    return {v for v, p in enumerate(g.priority) if p >= level}


# --------------------------------------------------------------------------
# solutions


def cost_of_rates(g: MultiLevelGraph, rates: Sequence[int]) -> float:
    if len(rates) != g.num_edges:
        raise SolutionError(f"rate vector has length {len(rates)}, expected {g.num_edges}")
    total = 0.0
    for eid, r in enumerate(rates):
        if not 0 <= r <= g.num_levels:
            raise SolutionError(f"rate {r} on edge {eid} outside 0..{g.num_levels}")
        if r:
            total += g.edges[eid].costs[r - 1]
    return total


def cost_of_solution(g: MultiLevelGraph, s: MlstSolution) -> float:
    return cost_of_rates(g, s.rates)


def validate_solution(g: MultiLevelGraph, s: MlstSolution) -> list[str]:
    """Check the tree requirement and per-level connectivity.

    Edge components that contain no terminal are ignored; a cycle anywhere
    among used edges is reported.
    """
    out: list[str] = []
    if len(s.rates) != g.num_edges:
        return [f"rate vector has length {len(s.rates)}, expected {g.num_edges}"]
    for eid, r in enumerate(s.rates):
        if not 0 <= r <= g.num_levels:
            out.append(f"rate {r} on edge {eid} outside 0..{g.num_levels}")
    if out:
        return out
    ds = DisjointSet(g.num_vertices)
    for eid, r in enumerate(s.rates):
        if r > 0:
            e = g.edges[eid]
            if not ds.union(e.u, e.v):
                out.append(f"used edges contain a cycle (closed by edge {eid})")
                break
    for level in range(1, g.num_levels + 1):
        ts = sorted(terminal_set(g, level))
        if len(ts) < 2:
            continue
        ds = DisjointSet(g.num_vertices)
        for eid, r in enumerate(s.rates):
            if r >= level:
                e = g.edges[eid]
                ds.union(e.u, e.v)
        anchor = ts[0]
        for t in ts[1:]:
            if ds.find(t) != ds.find(anchor):
                out.append(f"level {level}: terminals {anchor} and {t} are not connected "
                           f"by edges of rate >= {level}")
    if abs(s.cost - cost_of_rates(g, s.rates)) > TOL * max(1.0, abs(s.cost)):
        out.append(f"cached cost {s.cost} differs from recomputed {cost_of_rates(g, s.rates)}")
    return out


def is_feasible(g: MultiLevelGraph, s: MlstSolution) -> bool:
    return not validate_solution(g, s)


# --------------------------------------------------------------------------
# rate-aware shortest paths


def edge_charge(g: MultiLevelGraph, eid: int, rate: int,
                current_rates: Optional[Sequence[int]]) -> float:
    c = g.edges[eid].costs[rate - 1]
    if current_rates is None:
        return c
    y = current_rates[eid]
    if y == 0:
        return c
    return max(0.0, c - g.edges[eid].costs[y - 1])


@dataclass
class ShortestPathTree:
    source: int
    rate: int
    residual: bool
    dist: list[float]
    pred_edge: list[int]
    settled_order: list[int] = field(default_factory=list)

    def path_to(self, g: MultiLevelGraph, target: int) -> RatePath:
        if math.isinf(self.dist[target]):
            raise ValueError(f"vertex {target} unreachable from {self.source}")
        verts = [target]
        eids = []
        x = target
        while x != self.source:
            eid = self.pred_edge[x]
            eids.append(eid)
            x = g.edges[eid].other(x)
            verts.append(x)
        verts.reverse()
        eids.reverse()
        return RatePath(tuple(verts), tuple(eids), self.rate, self.dist[target], self.residual)


def shortest_path_tree(g: MultiLevelGraph, source: int, rate: int,
                       current_rates: Optional[Sequence[int]] = None,
                       penalty: Optional[PathPenalty] = None,
                       stop_at: Optional[set[int]] = None) -> ShortestPathTree:
    """Dijkstra from ``source`` charging each edge at ``rate``.

    With ``current_rates`` an edge costs only its upgrade ``max(0, c_rate - c_y)``.
    Ties on cost fall to ``penalty`` (when given) and then to the lower vertex
    index.  The search halts once a vertex of ``stop_at`` is settled.
    """
    if not 1 <= rate <= g.num_levels:
        raise ValueError(f"rate {rate} outside 1..{g.num_levels}")
    n = g.num_vertices
    dist = [math.inf] * n
    pen = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    pen[source] = 0.0
    heap = [(0.0, 0.0, source)]
    order = []
    adj = g.adjacency
    edges = g.edges
    while heap:
        d, p, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        order.append(u)
        if stop_at is not None and u in stop_at:
            break
        for w, eid in adj[u]:
            if done[w]:
                continue
            c = edges[eid].costs[rate - 1]
            if current_rates is not None:
                y = current_rates[eid]
                if y:
                    c = c - edges[eid].costs[y - 1]
                    if c < 0.0:
                        c = 0.0
            nd = d + c
            np_ = p + penalty(eid, w) if penalty is not None else 0.0
            if nd < dist[w] or (nd == dist[w] and np_ < pen[w]):
                dist[w] = nd
                pen[w] = np_
                pred[w] = eid
                heapq.heappush(heap, (nd, np_, w))
    return ShortestPathTree(source, rate, current_rates is not None, dist, pred, order)


def rate_shortest_path(g: MultiLevelGraph, source: int, targets: Iterable[int], rate: int,
                       current_rates: Optional[Sequence[int]] = None,
                       penalty: Optional[PathPenalty] = None) -> Optional[RatePath]:
    """Cheapest path from ``source`` to the nearest vertex of ``targets``."""
    targets = set(targets)
    if not targets:
        raise ValueError("empty target set")
    if source in targets:
        return RatePath((source,), (), rate, 0.0, current_rates is not None)
    spt = shortest_path_tree(g, source, rate, current_rates, penalty, stop_at=targets)
    reached = spt.settled_order[-1]
    if reached not in targets:
        return None
    return spt.path_to(g, reached)


def _require_terminal(g: MultiLevelGraph, v: int) -> None:
    if not 0 <= v < g.num_vertices or g.priority[v] == 0:
        raise ValueError(f"vertex {v} is not a terminal")


def sigma(g: MultiLevelGraph, u: int, v: int) -> float:
    """Full-cost distance between terminals at rate ``min(P(u), P(v))``."""
    _require_terminal(g, u)
    _require_terminal(g, v)
    if u == v:
        return 0.0
    rate = min(g.priority[u], g.priority[v])
    return rate_shortest_path(g, u, {v}, rate).connection_cost


def sigma_prime(g: MultiLevelGraph, u: int, v: int, current_rates: Sequence[int]) -> float:
    """Upgrade-cost distance between terminals given installed rates."""
    _require_terminal(g, u)
    _require_terminal(g, v)
    if u == v:
        return 0.0
    rate = min(g.priority[u], g.priority[v])
    return rate_shortest_path(g, u, {v}, rate, current_rates).connection_cost


# --------------------------------------------------------------------------
# pruning and rate normalization


def _trim_steiner_leaves(g: MultiLevelGraph, rates: list[int]) -> None:
    deg = [0] * g.num_vertices
    for eid, r in enumerate(rates):
        if r:
            e = g.edges[eid]
            deg[e.u] += 1
            deg[e.v] += 1
    stack = [v for v in range(g.num_vertices) if deg[v] == 1 and g.priority[v] == 0]
    while stack:
        v = stack.pop()
        if deg[v] != 1:
            continue
        for w, eid in g.adjacency[v]:
            if rates[eid]:
                rates[eid] = 0
                deg[v] -= 1
                deg[w] -= 1
                if deg[w] == 1 and g.priority[w] == 0:
                    stack.append(w)
                break


def prune_to_tree(g: MultiLevelGraph, s: MlstSolution) -> MlstSolution:
    """Break cycles and drop non-terminal leaves.

    Per cycle the lowest-rate edge goes; among equal rates the one with the
    larger installed cost, then the larger edge id.  That is a maximum
    spanning forest under the order ``(-rate, cost, id)``, which keeps every
    rate-threshold subgraph's components intact.
    """
    problems = [p for p in validate_solution(g, s) if "cycle" not in p and "cached" not in p]
    if problems:
        raise SolutionError("cannot prune an infeasible solution: " + "; ".join(problems))
    used = [eid for eid, r in enumerate(s.rates) if r > 0]
    used.sort(key=lambda eid: (-s.rates[eid], g.cost(eid, s.rates[eid]), eid))
    ds = DisjointSet(g.num_vertices)
    rates = [0] * g.num_edges
    for eid in used:
        e = g.edges[eid]
        if ds.union(e.u, e.v):
            rates[eid] = s.rates[eid]
    _trim_steiner_leaves(g, rates)
    return MlstSolution.from_rates(g, rates)


def minimal_tree_rates(g: MultiLevelGraph, tree_edges: Iterable[int]) -> list[int]:
    """Least feasible rate for every edge of a forest.

    An edge needs rate ``i`` exactly when both sides it separates (inside its
    own tree) hold a terminal of priority ``>= i``; that is the smaller of the
    two sides' maximum priorities.  Edges in terminal-free parts get 0.
    """
    tree_edges = list(tree_edges)
    n = g.num_vertices
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for eid in tree_edges:
        e = g.edges[eid]
        adj[e.u].append((e.v, eid))
        adj[e.v].append((e.u, eid))
    rates = [0] * g.num_edges
    seen = [False] * n
    for start in range(n):
        if seen[start] or not adj[start]:
            continue
        # iterative DFS: order + parent edge
        order = []
        parent_edge = {start: -1}
        stack = [start]
        seen[start] = True
        while stack:
            x = stack.pop()
            order.append(x)
            for y, eid in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    parent_edge[y] = eid
                    stack.append(y)
        # max priority in each subtree (bottom-up), then complement via the
        # priority multiset of the whole component
        sub_max = {x: g.priority[x] for x in order}
        for x in reversed(order):
            eid = parent_edge[x]
            if eid >= 0:
                px = g.edges[eid].other(x)
                if sub_max[x] > sub_max[px]:
                    sub_max[px] = sub_max[x]
        # max over the outside of each subtree: propagate top-down
        out_max = {start: 0}
        children: dict[int, list[int]] = {x: [] for x in order}
        for x in order:
            eid = parent_edge[x]
            if eid >= 0:
                children[g.edges[eid].other(x)].append(x)
        for x in order:
            kids = children[x]
            base = max(out_max[x], g.priority[x])
            # best and second best child subtree maxima
            best, second = 0, 0
            for c in kids:
                m = sub_max[c]
                if m > best:
                    best, second = m, best
                elif m > second:
                    second = m
            for c in kids:
                sibling = second if sub_max[c] == best else best
                out_max[c] = max(base, sibling)
        for x in order:
            eid = parent_edge[x]
            if eid >= 0:
                rates[eid] = min(sub_max[x], out_max[x])
    return rates


def normalize_rates(g: MultiLevelGraph, s: MlstSolution) -> MlstSolution:
    """Lower every edge of an acyclic solution to its least feasible rate."""
    return MlstSolution.from_rates(g, minimal_tree_rates(g, s.used_edges()))


def finalize(g: MultiLevelGraph, rates: Sequence[int]) -> MlstSolution:
    """Prune to a tree, then normalize rates; what every algorithm returns."""
    pruned = prune_to_tree(g, MlstSolution.from_rates(g, rates))
    return normalize_rates(g, pruned)
