"""Exact optima for desk-scale instances.

Independent routes to OPT:

* :func:`brute_force_opt` searches edge subsets that form forests, giving each
  tree edge its least feasible rate.
* :func:`enumerate_ilp_opt` searches the 0/1 level-selection space of the
  flow model built by :func:`build_ilp` (nesting enforced, connectivity
  checked per level from the root) and minimises its incremental objective.

A third route, :func:`subset_dp_opt`, runs a Dreyfus-Wagner style recursion
over terminal subsets; it scales to the batch experiments and is checked
against the two enumerators in the tests.

:func:`write_lp` / :func:`read_lp` move that model in and out of CPLEX LP text.
"""

from __future__ import annotations

import io
import math
import re
import time
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from .graph import (
    DisjointSet,
    InstanceError,
    MlstSolution,
    MultiLevelGraph,
    finalize,
    minimal_tree_rates,
    require_valid,
    terminal_set,
)
from .instance_io import format_number

DEFAULT_MAX_EDGES = 20
DEFAULT_MAX_VERTICES = 12
DEFAULT_MAX_ILP_BITS = 18


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class ExactResult:
    opt: float
    solution: MlstSolution
    nodes: int = 0
    evaluated: int = 0
    wall_time: float = 0.0
    method: str = "tree"


class _RollbackDSU:
    """Union by size without compression, so unions can be undone LIFO."""

    def __init__(self, n: int, marked):
        self.parent = list(range(n))
        self.size = [1] * n
        self.marked = [v in marked for v in range(n)]
        self.history: list[tuple[int, int, bool]] = []

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> Optional[bool]:
        """Merge; returns None if already joined, else whether both sides were marked."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        both = self.marked[ra] and self.marked[rb]
        self.history.append((rb, ra, self.marked[ra]))
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.marked[ra] = self.marked[ra] or self.marked[rb]
        return both

    def undo(self) -> None:
        rb, ra, ra_marked = self.history.pop()
        self.parent[rb] = rb
        self.size[ra] -= self.size[rb]
        self.marked[ra] = ra_marked


def _connects(n: int, pairs, group) -> bool:
    group = list(group)
    if len(group) < 2:
        return True
    ds = DisjointSet(n)
    for u, v in pairs:
        ds.union(u, v)
    r = ds.find(group[0])
    return all(ds.find(t) == r for t in group[1:])


def _path_tree_bound(g: MultiLevelGraph, T1: list[int]) -> list[int]:
    """Cheap feasible tree: BFS-free Dijkstra at top rate from a top terminal,
    keeping the union of root paths; used only to seed the incumbent."""
    import heapq

    ell = g.num_levels
    root = min(v for v in T1 if g.priority[v] == ell)
    dist = [math.inf] * g.num_vertices
    pred = [-1] * g.num_vertices
    dist[root] = 0.0
    heap = [(0.0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for w, eid in g.adjacency[u]:
            nd = d + g.edges[eid].costs[ell - 1]
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = eid
                heapq.heappush(heap, (nd, w))
    used = set()
    for t in T1:
        x = t
        while x != root:
            eid = pred[x]
            used.add(eid)
            x = g.edges[eid].other(x)
    return sorted(used)


def brute_force_opt(g: MultiLevelGraph, max_edges: int = DEFAULT_MAX_EDGES,
                    max_vertices: int = DEFAULT_MAX_VERTICES) -> ExactResult:
    """Minimum-cost MLST by exhaustive forest search with cost cut-offs."""
    require_valid(g)
    m, n = g.num_edges, g.num_vertices
    if m > max_edges or n > max_vertices:
        raise BudgetExceeded(f"instance has {n} vertices / {m} edges; budget is "
                             f"{max_vertices} vertices / {max_edges} edges")
    t0 = time.perf_counter()
    T1 = sorted(terminal_set(g, 1))
    if len(T1) <= 1:
        return ExactResult(0.0, MlstSolution.empty(g), 0, 1, time.perf_counter() - t0)

    order = sorted(range(m), key=lambda e: (g.edges[e].costs[0], e))
    c1 = [g.edges[e].costs[0] for e in order]
    suffix_min = [math.inf] * (m + 1)
    for i in range(m - 1, -1, -1):
        suffix_min[i] = min(c1[i], suffix_min[i + 1])
    ends = [(g.edges[e].u, g.edges[e].v) for e in order]

    seed_edges = _path_tree_bound(g, T1)
    seed_rates = minimal_tree_rates(g, seed_edges)
    best_cost = sum(g.cost(e, r) for e, r in enumerate(seed_rates))
    best_edges = [e for e, r in enumerate(seed_rates) if r]

    ds = _RollbackDSU(n, set(T1))
    chosen: list[int] = []
    stats = {"nodes": 0, "evaluated": 1}
    excluded = [False] * m

    def feasible_without(i: int) -> bool:
        # can T1 still be joined using chosen edges plus edges after position i?
        pairs = [ends[j] for j in range(m) if not excluded[j] and j != i]
        return _connects(n, pairs, T1)

    def dfs(i: int, cost: float, comps: int) -> None:
        nonlocal best_cost, best_edges
        stats["nodes"] += 1
        if comps == 1:
            stats["evaluated"] += 1
            edges = [order[j] for j in chosen]
            rates = minimal_tree_rates(g, edges)
            total = sum(g.cost(e, r) for e, r in enumerate(rates))
            if total < best_cost - 1e-12:
                best_cost = total
                best_edges = [e for e, r in enumerate(rates) if r]
            return
        if i == m:
            return
        if cost + (comps - 1) * suffix_min[i] >= best_cost - 1e-12:
            return
        u, v = ends[i]
        joined = ds.union(u, v)
        if joined is not None:
            chosen.append(i)
            dfs(i + 1, cost + c1[i], comps - 1 if joined else comps)
            chosen.pop()
            ds.undo()
        excluded[i] = True
        if feasible_without(i):
            dfs(i + 1, cost, comps)
        excluded[i] = False

    dfs(0, 0.0, len(T1))
    rates = minimal_tree_rates(g, best_edges)
    sol = MlstSolution.from_rates(g, rates)
    return ExactResult(sol.cost, sol, stats["nodes"], stats["evaluated"], time.perf_counter() - t0, "tree")


DEFAULT_MAX_DP_TERMINALS = 14


def _all_pairs(g: MultiLevelGraph, level: int):
    """Floyd-Warshall distance table at ``level`` costs."""
    n = g.num_vertices
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for e in g.edges:
        c = e.costs[level - 1]
        if c < dist[e.u, e.v]:
            dist[e.u, e.v] = dist[e.v, e.u] = c
    for k in range(n):
        dist = np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :])
    return dist


def _walk(g: MultiLevelGraph, dist, a: int, b: int, level: int) -> list[int]:
    """Edges of a cheapest a-b path, found by BFS over tight edges."""
    from collections import deque

    prev = {a: -1}
    q = deque([a])
    while q:
        x = q.popleft()
        if x == b:
            break
        for w, eid in g.adjacency[x]:
            c = g.edges[eid].costs[level - 1]
            if w not in prev and abs(dist[a, x] + c - dist[a, w]) <= 1e-9 * max(1.0, dist[a, w]):
                prev[w] = eid
                q.append(w)
    path = []
    x = b
    while x != a:
        eid = prev[x]
        path.append(eid)
        x = g.edges[eid].other(x)
    return path


def subset_dp_opt(g: MultiLevelGraph, max_terminals: int = DEFAULT_MAX_DP_TERMINALS,
                  max_vertices: Optional[int] = None) -> ExactResult:
    """OPT by dynamic programming over terminal subsets.

    Root the tree at a top-priority terminal.  In an optimal tree the edge
    above a vertex needs exactly the highest priority found below it, so a
    subtree hanging from ``v`` that holds terminal set ``D`` costs
    ``S(v, D) = min_u dist_q(v, u) + min_{D1 + D2 = D} S(u, D1) + S(u, D2)``
    with ``q = max P(D)``: the Dreyfus-Wagner recursion with a per-subset level.
    """
    require_valid(g)
    if max_vertices is not None and g.num_vertices > max_vertices:
        raise BudgetExceeded(f"{g.num_vertices} vertices exceed budget {max_vertices}")
    t0 = time.perf_counter()
    ell = g.num_levels
    root = min(v for v, p in enumerate(g.priority) if p == ell)
    terms = [t for t in g.terminals if t != root]
    k = len(terms)
    if k > max_terminals:
        raise BudgetExceeded(f"{k + 1} terminals exceed subset-DP budget {max_terminals + 1}")
    if k == 0:
        return ExactResult(0.0, MlstSolution.empty(g), 0, 1, time.perf_counter() - t0, "dp")
    n = g.num_vertices
    dists = {q: _all_pairs(g, q) for q in set(g.priority[t] for t in terms) | {1}}
    full = (1 << k) - 1
    top = [0] * (full + 1)
    for mask in range(1, full + 1):
        low = mask & -mask
        i = low.bit_length() - 1
        top[mask] = max(top[mask ^ low], g.priority[terms[i]])
    for q in range(1, ell + 1):
        if q not in dists and q in top:
            dists[q] = _all_pairs(g, q)
    S = np.full((full + 1, n), np.inf)
    B = np.full((full + 1, n), np.inf)
    for i, t in enumerate(terms):
        S[1 << i] = dists[g.priority[t]][:, t]
        B[1 << i] = np.inf
        B[1 << i][t] = 0.0
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        best = np.full(n, np.inf)
        sub = (mask - 1) & mask
        while sub:
            other = mask ^ sub
            if sub < other:
                np.minimum(best, S[sub] + S[other], out=best)
            sub = (sub - 1) & mask
        B[mask] = best
        S[mask] = (dists[top[mask]] + best[None, :]).min(axis=1)
    opt = float(S[full, root])

    # rebuild one optimal structure, then prune it
    rates = [0] * g.num_edges

    def build(v: int, mask: int) -> None:
        q = top[mask]
        d = dists[q]
        if mask & (mask - 1) == 0:
            t = terms[mask.bit_length() - 1]
            u, split = t, None
        else:
            vals = d[v] + B[mask]
            u = int(np.argmin(vals))
            split = None
            sub = (mask - 1) & mask
            while sub:
                other = mask ^ sub
                if sub < other and abs(S[sub][u] + S[other][u] - B[mask][u]) <= 1e-9 * max(1.0, B[mask][u]):
                    split = (sub, other)
                    break
                sub = (sub - 1) & mask
        for eid in _walk(g, d, v, u, q):
            rates[eid] = max(rates[eid], q)
        if split is not None:
            build(u, split[0])
            build(u, split[1])

    build(root, full)
    sol = finalize(g, rates)
    return ExactResult(opt, sol, full, full, time.perf_counter() - t0, "dp")


def exact_opt(g: MultiLevelGraph, method: str = "dp", **budget) -> ExactResult:
    if method == "dp":
        return subset_dp_opt(g, **budget)
    if method == "tree":
        return brute_force_opt(g, **budget)
    if method == "ilp-enum":
        return enumerate_ilp_opt(build_ilp(g), g, **budget)
    raise ValueError(f"unknown exact method {method!r}")


# --------------------------------------------------------------------------
# ILP model


@dataclass
class LinearConstraint:
    name: str
    terms: list[tuple[float, str]]
    sense: str
    rhs: float


@dataclass
class IlpModel:
    root: int
    num_levels: int
    arcs: list[tuple[int, int, int]]
    terminal_sets: dict[int, list[int]]
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[LinearConstraint] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    binaries: list[str] = field(default_factory=list)
    flows: list[str] = field(default_factory=list)

    @property
    def num_variables(self) -> int:
        return len(self.binaries) + len(self.flows)


def xvar(u: int, v: int, i: int) -> str:
    return f"x_{u}_{v}_{i}"


def fvar(u: int, v: int, i: int) -> str:
    return f"f_{u}_{v}_{i}"


def build_ilp(g: MultiLevelGraph, root: Optional[int] = None) -> IlpModel:
    """Directed multi-commodity-free flow model: one flow per level from the root."""
    require_valid(g)
    ell = g.num_levels
    if root is None:
        root = min(v for v, p in enumerate(g.priority) if p == ell)
    if not 0 <= root < g.num_vertices or g.priority[root] != ell:
        raise InstanceError(f"root {root} must have top priority {ell}")
    arcs = []
    for eid, e in enumerate(g.edges):
        arcs.append((e.u, e.v, eid))
        arcs.append((e.v, e.u, eid))
    tsets = {i: sorted(terminal_set(g, i)) for i in range(1, ell + 1)}
    model = IlpModel(root, ell, arcs, tsets)
    for i in range(1, ell + 1):
        for u, v, eid in arcs:
            inc = g.cost(eid, i) - g.cost(eid, i - 1)
            model.objective[xvar(u, v, i)] = inc
    out_arcs: dict[int, list[tuple[int, int]]] = {v: [] for v in range(g.num_vertices)}
    in_arcs: dict[int, list[tuple[int, int]]] = {v: [] for v in range(g.num_vertices)}
    for u, v, _ in arcs:
        out_arcs[u].append((u, v))
        in_arcs[v].append((u, v))
    for i in range(1, ell + 1):
        ti = set(tsets[i])
        for v in range(g.num_vertices):
            terms = [(1.0, fvar(a, b, i)) for a, b in out_arcs[v]]
            terms += [(-1.0, fvar(a, b, i)) for a, b in in_arcs[v]]
            if v == root:
                rhs = len(ti) - 1
            elif v in ti:
                rhs = -1
            else:
                rhs = 0
            if terms:
                model.constraints.append(LinearConstraint(f"flow_{v}_{i}", terms, "=", float(rhs)))
    for i in range(2, ell + 1):
        for u, v, _ in arcs:
            model.constraints.append(LinearConstraint(
                f"nest_{u}_{v}_{i}", [(1.0, xvar(u, v, i)), (-1.0, xvar(u, v, i - 1))], "<=", 0.0))
    for i in range(1, ell + 1):
        cap = len(tsets[i]) - 1
        for u, v, _ in arcs:
            terms = [(1.0, fvar(u, v, i))]
            if cap:
                terms.append((-float(cap), xvar(u, v, i)))
            model.constraints.append(LinearConstraint(f"cap_{u}_{v}_{i}", terms, "<=", 0.0))
    for i in range(1, ell + 1):
        cap = len(tsets[i]) - 1
        for u, v, _ in arcs:
            model.binaries.append(xvar(u, v, i))
            model.flows.append(fvar(u, v, i))
            model.bounds[fvar(u, v, i)] = (0.0, float(cap))
    return model


def enumerate_ilp_opt(model: IlpModel, g: MultiLevelGraph,
                      max_bits: int = DEFAULT_MAX_ILP_BITS) -> ExactResult:
    """Exhaust the model's edge-level selections (undirected projection).

    A selection is a nested family ``x^ell <= ... <= x^1``, i.e. one top level
    per edge; it is feasible when every ``T_i`` reaches the root through
    level-``i`` edges.  Objective coefficients come from the model.
    """
    ell = model.num_levels
    m = g.num_edges
    if ell * m > max_bits:
        raise BudgetExceeded(f"ell*|E| = {ell * m} exceeds enumeration budget {max_bits}")
    t0 = time.perf_counter()
    n = g.num_vertices
    ends = [(g.edges[e].u, g.edges[e].v) for e in range(m)]
    # cumulative objective for giving edge e top level k
    level_cost = []
    for eid, (u, v) in enumerate(ends):
        acc = [0.0]
        for i in range(1, ell + 1):
            acc.append(acc[-1] + model.objective[xvar(u, v, i)])
        level_cost.append(acc)
    groups = {i: set(model.terminal_sets[i]) | {model.root} for i in range(1, ell + 1)}

    best_cost = math.inf
    best_rates: Optional[list[int]] = None
    rates = [0] * m
    stats = {"nodes": 0, "evaluated": 0}

    def still_feasible(i_next: int) -> bool:
        for lvl in range(1, ell + 1):
            pairs = [ends[e] for e in range(m) if e >= i_next or rates[e] >= lvl]
            if not _connects(n, pairs, groups[lvl]):
                return False
        return True

    def dfs(e: int, cost: float) -> None:
        nonlocal best_cost, best_rates
        stats["nodes"] += 1
        if cost >= best_cost - 1e-12:
            return
        if not still_feasible(e):
            return
        if e == m:
            stats["evaluated"] += 1
            best_cost = cost
            best_rates = list(rates)
            return
        for k in range(ell, -1, -1):
            rates[e] = k
            dfs(e + 1, cost + level_cost[e][k])
        rates[e] = 0

    dfs(0, 0.0)
    if best_rates is None:
        raise InstanceError("model has no feasible selection")
    sol = finalize(g, best_rates)
    return ExactResult(best_cost, sol, stats["nodes"], stats["evaluated"], time.perf_counter() - t0, "ilp-enum")


# --------------------------------------------------------------------------
# LP text


_WRAP = 6


def _terms_text(terms: list[tuple[float, str]]) -> list[str]:
    chunks = []
    for k, (c, var) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = format_number(abs(c))
        if k == 0:
            chunks.append(f"{'-' if c < 0 else ''}{mag} {var}")
        else:
            chunks.append(f"{sign} {mag} {var}")
    lines = []
    for k in range(0, len(chunks), _WRAP):
        lines.append(" ".join(chunks[k:k + _WRAP]))
    return lines


def _emit(head: str, terms: list[tuple[float, str]], tail: str = "") -> list[str]:
    body = _terms_text(terms) or ["0"]
    out = [f" {head} {body[0]}"]
    out += [f"   {line}" for line in body[1:]]
    if tail:
        out[-1] += f" {tail}"
    return out


def lp_text(model: IlpModel) -> str:
    lines = [f"\\ multi-level Steiner tree flow model, root {model.root}, {model.num_levels} level(s)",
             "Minimize"]
    lines += _emit("obj:", list((c, v) for v, c in model.objective.items()))
    lines.append("Subject To")
    for con in model.constraints:
        lines += _emit(f"{con.name}:", con.terms, f"{con.sense} {format_number(con.rhs)}")
    lines.append("Bounds")
    for var in model.flows:
        lo, hi = model.bounds[var]
        lines.append(f" {format_number(lo)} <= {var} <= {format_number(hi)}")
    lines.append("Binaries")
    for k in range(0, len(model.binaries), 8):
        lines.append(" " + " ".join(model.binaries[k:k + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: IlpModel, sink: Optional[TextIO] = None) -> str:
    text = lp_text(model)
    if sink is not None:
        sink.write(text)
    return text


@dataclass
class ParsedLp:
    objective: dict[str, float]
    constraints: dict[str, LinearConstraint]
    bounds: dict[str, tuple[float, float]]
    binaries: list[str]


_SECTIONS = {"minimize": "obj", "subject to": "st", "bounds": "bounds", "binaries": "bin", "end": "end"}
_NUM = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _parse_terms(tokens: list[str]) -> list[tuple[float, str]]:
    terms = []
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
        elif _NUM.match(tok):
            coef = float(tok)
        else:
            terms.append((sign * (1.0 if coef is None else coef), tok))
            sign, coef = 1.0, None
    return terms


def read_lp(text: str) -> ParsedLp:
    """Parse the subset of CPLEX LP that :func:`write_lp` emits."""
    sections: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": []}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        key = _SECTIONS.get(line.lower())
        if key == "end":
            break
        if key is not None:
            current = key
            continue
        if current is None:
            raise ValueError(f"content before any section: {line!r}")
        sections[current].append(line)

    obj_tokens = " ".join(sections["obj"]).split()
    if obj_tokens and obj_tokens[0].endswith(":"):
        obj_tokens = obj_tokens[1:]
    if obj_tokens == ["0"]:
        obj_tokens = []
    objective = {var: c for c, var in _parse_terms(obj_tokens)}

    constraints: dict[str, LinearConstraint] = {}
    name, buf = None, []

    def flush():
        if name is None:
            return
        for k, tok in enumerate(buf):
            if tok in ("<=", ">=", "="):
                lhs = buf[:k]
                constraints[name] = LinearConstraint(name, _parse_terms([] if lhs == ["0"] else lhs),
                                                     tok, float(buf[k + 1]))
                return
        raise ValueError(f"constraint {name} has no sense")

    for tok in " ".join(sections["st"]).split():
        if tok.endswith(":"):
            flush()
            name, buf = tok[:-1], []
        else:
            buf.append(tok)
    flush()

    bounds = {}
    for line in sections["bounds"]:
        lo, _, var, _, hi = line.split()
        bounds[var] = (float(lo), float(hi))
    binaries = " ".join(sections["bin"]).split()
    return ParsedLp(objective, constraints, bounds, binaries)
