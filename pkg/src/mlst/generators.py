"""Instance families: random topologies with priority/cost schemes, and the
adversarial constructions (Imase-Waxman diamonds, the Prim trap, cycles with
a near-tight shortcut)."""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import networkx as nx

from .algorithms import is_proportional
from .graph import MultiLevelGraph, TieBreak, validate_instance

MAX_RESAMPLE = 1000


@dataclass(frozen=True)
class Topology:
    num_vertices: int
    edges: tuple[tuple[int, int], ...]


def _from_nx(G: nx.Graph) -> Topology:
    edges = sorted((min(u, v), max(u, v)) for u, v in G.edges())
    return Topology(G.number_of_nodes(), tuple(edges))


def _resample_connected(make, seed: int, what: str) -> Topology:
    rng = random.Random(seed)
    for _ in range(MAX_RESAMPLE):
        G = make(rng.getrandbits(32))
        if nx.is_connected(G):
            return _from_nx(G)
    raise RuntimeError(f"{what}: no connected sample in {MAX_RESAMPLE} attempts")


def gen_er(n: int, eps: float = 1.0, seed: int = 0) -> Topology:
    """G(n, p) with ``p = (1 + eps) ln n / n``, conditioned on connectivity."""
    if n < 2:
        raise ValueError("ER needs n >= 2")
    p = min(1.0, (1 + eps) * math.log(n) / n)
    return _resample_connected(lambda s: nx.gnp_random_graph(n, p, seed=s), seed, "ER")


def gen_ws(n: int, K: int = 6, beta: float = 0.2, seed: int = 0) -> Topology:
    if K >= n:
        raise ValueError(f"WS needs K < n (K={K}, n={n})")
    return _resample_connected(lambda s: nx.watts_strogatz_graph(n, K, beta, seed=s), seed, "WS")


def gen_ba(n: int, m0: int, m: int = 5, seed: int = 0) -> Topology:
    """Preferential attachment grown from a path on ``m0`` vertices."""
    if not 1 <= m <= m0:
        raise ValueError(f"BA needs 1 <= m <= m0 (m={m}, m0={m0})")
    if n < m0:
        raise ValueError(f"BA needs n >= m0 (n={n}, m0={m0})")
    seed_graph = nx.path_graph(m0)
    if n == m0:
        return _from_nx(seed_graph)
    rng = random.Random(seed)
    G = nx.barabasi_albert_graph(n, m, seed=rng.getrandbits(32), initial_graph=seed_graph)
    return _from_nx(G)


def _level_sizes(n: int, ell: int, method: str) -> list[int]:
    if method == "linear":
        raw = [n * (1 - i / (ell + 1)) for i in range(1, ell + 1)]
    elif method == "exponential":
        raw = [n / 2 ** i for i in range(1, ell + 1)]
    else:
        raise ValueError(f"unknown terminal selection method {method!r}")
    return [int(math.floor(x + 0.5)) for x in raw]


def assign_priorities(n: int, ell: int, method: str, seed: int) -> list[int]:
    """Nested random terminal sets ``T_1 ⊇ ... ⊇ T_ell`` sized by ``method``.

    linear: ``|T_i| = n (1 - i/(ell+1))``; exponential: ``|T_i| = n / 2^i``
    (each rounded half-up).  If rounding leaves ``T_ell`` empty one random
    vertex of the smallest non-empty set (or of V) is promoted to ``ell``.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell > n:
        raise ValueError(f"ell={ell} exceeds n={n}")
    rng = random.Random(seed)
    sizes = _level_sizes(n, ell, method)
    prio = [0] * n
    pool = list(range(n))
    for i, size in enumerate(sizes, start=1):
        size = min(size, len(pool))
        pool = sorted(rng.sample(pool, size))
        for v in pool:
            prio[v] = i
    if ell not in prio:
        candidates = [v for v in range(n) if prio[v] == max(prio)] if max(prio) > 0 else list(range(n))
        prio[rng.choice(candidates)] = ell
    return prio


def assign_costs(num_edges: int, ell: int, scheme: str, seed: int) -> list[tuple[float, ...]]:
    """prop: ``c_1 ~ U{1..10}``, ``c_i = i c_1``; nonprop: each increment ``~ U{1..10}``."""
    rng = random.Random(seed)
    out = []
    for _ in range(num_edges):
        if scheme == "prop":
            c1 = rng.randint(1, 10)
            out.append(tuple(float(i * c1) for i in range(1, ell + 1)))
        elif scheme == "nonprop":
            acc, cs = 0, []
            for _ in range(ell):
                acc += rng.randint(1, 10)
                cs.append(float(acc))
            out.append(tuple(cs))
        else:
            raise ValueError(f"unknown cost scheme {scheme!r}")
    return out


# --------------------------------------------------------------------------
# adversarial families


@dataclass(frozen=True)
class ImaseWaxman:
    graph: MultiLevelGraph
    depth: tuple[int, ...]
    terminal_path: tuple[int, ...]
    tie_break: TieBreak


def _iw_penalty(g: MultiLevelGraph, rates: Sequence[int], eid: int, w: int) -> float:
    # steer equal-cost paths away from bought edges and from terminals
    return (1.0 if rates[eid] > 0 else 0.0) + (1.0 if g.priority[w] > 0 else 0.0)


def gen_imase_waxman(k: int) -> ImaseWaxman:
    """Diamond graph ``G_k`` (every edge of ``G_{i-1}`` replaced by two
    parallel two-edge paths through fresh depth-``i`` vertices), edge cost
    ``2^-k``, terminals on one shortest ``v0``-``v1`` path, ``ell = 1``.

    Vertices are numbered by depth (``v0 = 0``, ``v1 = 1``).  The returned
    tie-break reproduces the worst-case behaviour: terminals retire deepest
    first and equal-cost paths avoid bought edges and other terminals.
    """
    if not 0 <= k <= 6:
        raise ValueError(f"k must be in 0..6, got {k}")
    depth = [0, 0]
    edges = [(0, 1)]
    path = [0, 1]
    for d in range(1, k + 1):
        new_edges = []
        first_mid = {}
        for u, v in edges:
            w1, w2 = len(depth), len(depth) + 1
            depth += [d, d]
            first_mid[(u, v)] = w1
            new_edges += [(u, w1), (w1, v), (u, w2), (w2, v)]
        new_path = [path[0]]
        for a, b in zip(path, path[1:]):
            mid = first_mid.get((a, b), first_mid.get((b, a)))
            new_path += [mid, b]
        edges, path = new_edges, new_path
    c = 1.0 / 2 ** k
    n = len(depth)
    prio = [0] * n
    for v in path:
        prio[v] = 1
    g = MultiLevelGraph.build(n, [(u, v, (c,)) for u, v in edges], 1, prio)
    dep = tuple(depth)
    tb = TieBreak(order_key=lambda v: (dep[v], v),
                  removal_key=lambda v: (-dep[v], v),
                  path_penalty=_iw_penalty)
    return ImaseWaxman(g, dep, tuple(path), tb)


def gen_prim_bad(ell: int, eps: float, eps_prime: float = 1e-6) -> MultiLevelGraph:
    """Cycle ``r, v_1, ..., v_ell`` (r = vertex 0, v_i = vertex i).

    ``c_i(r v_1) = i (1 - eps)``, ``c_i(r v_ell) = 1`` and the remaining cycle
    edges cost ``eps_prime`` at every rate; ``P(v_i) = i``, ``P(r) = ell``.
    With ``ell = 1`` the two r-v_1 edges would be parallel, so only the
    cheaper ``1 - eps`` edge is kept.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    edges = [(0, 1, tuple(i * (1 - eps) for i in range(1, ell + 1)))]
    for i in range(1, ell):
        edges.append((i, i + 1, (eps_prime,) * ell))
    if ell > 1:
        edges.append((ell, 0, (1.0,) * ell))
    prio = [ell] + list(range(1, ell + 1))
    return MultiLevelGraph.build(ell + 1, edges, ell, prio)


def gen_adversarial_cycle(n: int, eps: float = 0.5, extra_edges: int = 0, seed: int = 0,
                          scheme: str = "prop") -> MultiLevelGraph:
    """Two-level trap for top-down methods.

    Path ``0 - 1 - ... - n-1`` with random costs plus a shortcut ``0 - (n-1)``
    whose level-1 cost is ``eps`` below the path's (scaled by i for "prop",
    ``eps`` below the path's level-2 cost otherwise); the shortcut's
    endpoints have priority 2 and every other vertex priority 1.  Extra chords
    cost their along-path distance plus a random slack, so they never undercut
    the path.
    """
    if n < 3:
        raise ValueError("adversarial cycle needs n >= 3")
    rng = random.Random(seed)
    path_costs = assign_costs(n - 1, 2, scheme, rng.getrandbits(64))
    w = [sum(c[i] for c in path_costs) for i in range(2)]
    if not 0 < eps < w[0]:
        raise ValueError("eps must be positive and smaller than the path length")
    edges = [(i, i + 1, path_costs[i]) for i in range(n - 1)]
    short = w[0] - eps
    edges.append((0, n - 1, (short, 2 * short) if scheme == "prop" else (short, w[1] - eps)))
    present = {(min(u, v), max(u, v)) for u, v, _ in edges}
    candidates = [(a, b) for a in range(n) for b in range(a + 2, n) if (a, b) not in present]
    rng.shuffle(candidates)
    for a, b in sorted(candidates[:extra_edges]):
        d = [sum(path_costs[j][i] for j in range(a, b)) for i in range(2)]
        s = rng.randint(1, 10)
        if scheme == "prop":
            cs = (d[0] + s, 2 * (d[0] + s))
        else:
            cs = (d[0] + s, d[1] + s)
        edges.append((a, b, cs))
    prio = [1] * n
    prio[0] = prio[n - 1] = 2
    return MultiLevelGraph.build(n, edges, 2, prio)


# --------------------------------------------------------------------------
# spec-driven generation


@dataclass(frozen=True)
class GenSpec:
    model: str
    n: int = 10
    ell: int = 2
    tsm: str = "linear"
    te: str = "prop"
    seed: int = 0
    eps: float = 1.0
    K: int = 6
    beta: float = 0.2
    m0: Optional[int] = None
    m: int = 5
    k: int = 2
    extra_edges: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in asdict(self).items() if v is not None)


def _topology(spec: GenSpec, seed: int) -> Topology:
    if spec.model == "er":
        return gen_er(spec.n, spec.eps, seed)
    if spec.model == "ws":
        return gen_ws(spec.n, spec.K, spec.beta, seed)
    if spec.model == "ba":
        m = min(spec.m, spec.n - 1)
        m0 = spec.m0 if spec.m0 is not None else max(m, min(spec.n, m + 1))
        return gen_ba(spec.n, m0, m, seed)
    raise ValueError(f"unknown random model {spec.model!r}")


def generate(spec: GenSpec) -> MultiLevelGraph:
    """Deterministic instance for ``spec``; the seed fixes every random draw."""
    if spec.model == "imase-waxman":
        return gen_imase_waxman(spec.k).graph
    if spec.model == "prim-bad":
        return gen_prim_bad(spec.ell, spec.eps)
    if spec.model == "adversarial-cycle":
        return gen_adversarial_cycle(spec.n, spec.eps, spec.extra_edges, spec.seed, spec.te)
    rng = random.Random(spec.seed)
    topo_seed, prio_seed, cost_seed = (rng.getrandbits(64) for _ in range(3))
    topo = _topology(spec, topo_seed)
    prio = assign_priorities(topo.num_vertices, spec.ell, spec.tsm, prio_seed)
    costs = assign_costs(len(topo.edges), spec.ell, spec.te, cost_seed)
    g = MultiLevelGraph.build(topo.num_vertices, [(u, v, c) for (u, v), c in zip(topo.edges, costs)],
                              spec.ell, prio)
    problems = validate_instance(g)
    if problems:
        raise RuntimeError(f"generator produced an invalid instance: {problems}")
    return g


__all__ = [
    "GenSpec", "ImaseWaxman", "Topology", "assign_costs", "assign_priorities", "gen_adversarial_cycle",
    "gen_ba", "gen_er", "gen_imase_waxman", "gen_prim_bad", "gen_ws", "generate", "is_proportional",
]
