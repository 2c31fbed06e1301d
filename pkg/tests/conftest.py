import itertools
import random

import networkx as nx
import pytest
from hypothesis import strategies as st

from mlst.graph import MultiLevelGraph, terminal_set


def random_instance(rng: random.Random, n: int, ell: int, p: float = 0.5, max_cost: int = 10,
                    prop: bool = False, terminal_frac: float = 0.6) -> MultiLevelGraph:
    """Connected G(n, p) plus a random spanning path, integer costs, nested priorities."""
    order = list(range(n))
    rng.shuffle(order)
    edges = {tuple(sorted(pair)) for pair in zip(order, order[1:])}
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.add((u, v))
    out = []
    for u, v in sorted(edges):
        c1 = rng.randint(1, max_cost)
        if prop:
            costs = [i * c1 for i in range(1, ell + 1)]
        else:
            costs = [c1]
            for _ in range(ell - 1):
                costs.append(costs[-1] + rng.randint(0, max_cost))
        out.append((u, v, costs))
    prio = [0] * n
    for v in range(n):
        if rng.random() < terminal_frac:
            prio[v] = rng.randint(1, ell)
    prio[rng.randrange(n)] = ell
    return MultiLevelGraph.build(n, out, ell, prio)


@st.composite
def instances(draw, min_n=2, max_n=7, max_ell=3, prop=None):
    n = draw(st.integers(min_n, max_n))
    ell = draw(st.integers(1, max_ell))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.sampled_from([0.2, 0.4, 0.7]))
    use_prop = draw(st.booleans()) if prop is None else prop
    return random_instance(random.Random(seed), n, ell, p=p, prop=use_prop)


def nx_graph(g: MultiLevelGraph, level: int = 1) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.num_vertices))
    for eid, e in enumerate(g.edges):
        G.add_edge(e.u, e.v, weight=e.costs[level - 1], eid=eid)
    return G


def feasible_by_components(g: MultiLevelGraph, rates) -> bool:
    """Per level, all of T_i inside one networkx component of the rate >= i edges."""
    for i in range(1, g.num_levels + 1):
        ts = terminal_set(g, i)
        G = nx.Graph()
        G.add_nodes_from(range(g.num_vertices))
        G.add_edges_from((g.edges[e].u, g.edges[e].v) for e, r in enumerate(rates) if r >= i)
        if len({frozenset(nx.node_connected_component(G, t)) for t in ts}) > 1:
            return False
    return True


@pytest.fixture
def rng():
    return random.Random(12345)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
