"""Single-level Steiner tree heuristics (all 2(1 - 1/|T|)-approximations).

The functions accept either a :class:`~mlst.graph.MultiLevelGraph` (using the
costs of ``level``) or a plain :class:`WeightedGraph`, and return edge ids of
whichever graph they were given.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Union

from .graph import DisjointSet, MultiLevelGraph


@dataclass(frozen=True)
class WeightedGraph:
    num_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for eid, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, eid))
            adj[v].append((u, eid))
        return tuple(tuple(a) for a in adj)


def level_view(g: MultiLevelGraph, level: int = 1) -> WeightedGraph:
    return WeightedGraph(g.num_vertices, tuple((e.u, e.v, e.costs[level - 1]) for e in g.edges))


@dataclass(frozen=True)
class SteinerResult:
    edges: frozenset[int]
    cost: float
    heuristic: str


GraphLike = Union[MultiLevelGraph, WeightedGraph]


def _view(g: GraphLike, level: int) -> WeightedGraph:
    return level_view(g, level) if isinstance(g, MultiLevelGraph) else g


def _dijkstra(wg: WeightedGraph, sources: Iterable[int], stop: Optional[set[int]] = None,
              free: Optional[set[int]] = None):
    """Multi-source Dijkstra; returns (dist, pred_edge, first stop vertex settled).

    Edges in ``free`` cost nothing.  Ties settle the lower vertex index first.
    """
    n = wg.num_vertices
    dist = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    heap = []
    for s in sources:
        dist[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    adj, edges = wg.adjacency, wg.edges
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if stop is not None and u in stop:
            return dist, pred, u
        for w, eid in adj[u]:
            if done[w]:
                continue
            nd = d if free and eid in free else d + edges[eid][2]
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = eid
                heapq.heappush(heap, (nd, w))
    return dist, pred, None


def _walk_back(wg: WeightedGraph, pred: list[int], x: int) -> list[int]:
    path = []
    while pred[x] >= 0:
        eid = pred[x]
        path.append(eid)
        u, v, _ = wg.edges[eid]
        x = u if x == v else v
    return path


def _check_terminals(wg: WeightedGraph, terminals) -> list[int]:
    ts = sorted(set(terminals))
    if not ts:
        raise ValueError("empty terminal set")
    for t in ts:
        if not 0 <= t < wg.num_vertices:
            raise ValueError(f"terminal {t} out of range")
    return ts


def trim_to_terminals(wg: WeightedGraph, edges: Iterable[int], terminals) -> set[int]:
    """Drop cycles (keeping cheaper edges) and non-terminal leaves."""
    tset = set(terminals)
    ds = DisjointSet(wg.num_vertices)
    kept = set()
    for eid in sorted(edges, key=lambda e: (wg.edges[e][2], e)):
        u, v, _ = wg.edges[eid]
        if ds.union(u, v):
            kept.add(eid)
    deg = [0] * wg.num_vertices
    inc: list[list[int]] = [[] for _ in range(wg.num_vertices)]
    for eid in kept:
        u, v, _ = wg.edges[eid]
        deg[u] += 1
        deg[v] += 1
        inc[u].append(eid)
        inc[v].append(eid)
    stack = [x for x in range(wg.num_vertices) if deg[x] == 1 and x not in tset]
    while stack:
        x = stack.pop()
        if deg[x] != 1:
            continue
        for eid in inc[x]:
            if eid in kept:
                kept.discard(eid)
                u, v, _ = wg.edges[eid]
                y = u if x == v else v
                deg[x] -= 1
                deg[y] -= 1
                if deg[y] == 1 and y not in tset:
                    stack.append(y)
                break
    return kept


def _result(wg: WeightedGraph, edges: set[int], tag: str) -> SteinerResult:
    return SteinerResult(frozenset(edges), sum(wg.edges[e][2] for e in edges), tag)


def steiner_kruskal(g: GraphLike, terminals, level: int = 1) -> SteinerResult:
    """Wang's heuristic: repeatedly join the two closest partial trees.

    Each tree is represented by the terminals not yet retired.  Edges already
    chosen are free, so the distance between two representatives is the gap
    between their trees.  The closest pair (ties to the lower ids) is joined
    and the first of the two is retired.
    """
    wg = _view(g, level)
    ts = _check_terminals(wg, terminals)
    alive = list(ts)
    chosen: set[int] = set()
    while len(alive) > 1:
        best = None
        for v in alive:
            dist, pred, _ = _dijkstra(wg, [v], free=chosen)
            for u in alive:
                if u == v:
                    continue
                if math.isinf(dist[u]):
                    raise ValueError("terminals lie in different connected components")
                key = (dist[u], v, u)
                if best is None or key < best[0]:
                    best = (key, pred)
        (_, v, u), pred = best
        chosen.update(_walk_back(wg, pred, u))
        alive.remove(v)
    return _result(wg, trim_to_terminals(wg, chosen, ts), "kruskal")


def steiner_prim(g: GraphLike, terminals, root: Optional[int] = None, level: int = 1) -> SteinerResult:
    """Takahashi-Matsuyama: grow one tree, always attaching the nearest terminal."""
    wg = _view(g, level)
    ts = _check_terminals(wg, terminals)
    if root is None:
        root = ts[0]
    elif root not in ts:
        raise ValueError(f"root {root} is not a terminal")
    tree_vertices = {root}
    remaining = set(ts) - tree_vertices
    chosen: set[int] = set()
    while remaining:
        _, pred, hit = _dijkstra(wg, sorted(tree_vertices), remaining)
        if hit is None:
            raise ValueError("terminals lie in different connected components")
        for eid in _walk_back(wg, pred, hit):
            chosen.add(eid)
            u, v, _ = wg.edges[eid]
            tree_vertices.update((u, v))
        remaining -= tree_vertices
    return _result(wg, trim_to_terminals(wg, chosen, ts), "prim")


def steiner_metric_mst(g: GraphLike, terminals, level: int = 1) -> SteinerResult:
    """MST of the terminal metric closure, expanded back into graph paths."""
    wg = _view(g, level)
    ts = _check_terminals(wg, terminals)
    trees = {t: _dijkstra(wg, [t]) for t in ts}
    closure = []
    for i, a in enumerate(ts):
        dist = trees[a][0]
        for b in ts[i + 1:]:
            if math.isinf(dist[b]):
                raise ValueError("terminals lie in different connected components")
            closure.append((dist[b], a, b))
    closure.sort()
    ds = DisjointSet(wg.num_vertices)
    union_edges: set[int] = set()
    for _, a, b in closure:
        if ds.union(a, b):
            union_edges.update(_walk_back(wg, trees[a][1], b))
    return _result(wg, trim_to_terminals(wg, union_edges, ts), "metric-mst")


HEURISTICS = {
    "kruskal": steiner_kruskal,
    "prim": steiner_prim,
    "mst": steiner_metric_mst,
    "metric-mst": steiner_metric_mst,
}


def get_heuristic(name: str):
    try:
        return HEURISTICS[name]
    except KeyError:
        raise ValueError(f"unknown Steiner heuristic {name!r}; choose from {sorted(HEURISTICS)}") from None
