import math
import statistics
from pathlib import Path

import networkx as nx
import pytest

from mlst.algorithms import is_proportional
from mlst.exact import brute_force_opt
from mlst.generators import (
    GenSpec,
    assign_costs,
    assign_priorities,
    gen_adversarial_cycle,
    gen_ba,
    gen_er,
    gen_imase_waxman,
    gen_prim_bad,
    gen_ws,
    generate,
)
from mlst.graph import terminal_set, validate_instance
from mlst.instance_io import dumps

SNAPSHOTS = Path(__file__).parent / "data" / "snapshots"

SNAPSHOT_SPECS = {
    "er_n12_l3_lin_prop": GenSpec("er", n=12, ell=3, tsm="linear", te="prop", seed=7),
    "ws_n50_default": GenSpec("ws", n=50, ell=2, tsm="exponential", te="nonprop", seed=11),
    "ba_n20_l2": GenSpec("ba", n=20, ell=2, tsm="linear", te="nonprop", seed=5, m0=5, m=3),
    "cycle_n8": GenSpec("adversarial-cycle", n=8, eps=0.5, extra_edges=3, seed=4, te="prop"),
}


def _connected(topo):
    G = nx.Graph(list(topo.edges))
    G.add_nodes_from(range(topo.num_vertices))
    return nx.is_connected(G)


# ---- topologies -----------------------------------------------------------------------

def test_er_two_vertices_is_one_edge():
    assert gen_er(2, seed=3).edges == ((0, 1),)


def test_er_is_connected_and_deterministic():
    for seed in range(30):
        t = gen_er(10, seed=seed)
        assert _connected(t)
    assert gen_er(50, seed=1) == gen_er(50, seed=1)


def test_er_mean_degree_near_closed_form():
    n = 50
    degs = [2 * len(gen_er(n, 1.0, seed=s).edges) / n for s in range(100)]
    target = 2 * math.log(n) * (n - 1) / n
    assert abs(statistics.mean(degs) - target) <= 0.2 * target


def test_ws_without_rewiring_is_ring():
    t = gen_ws(8, K=2, beta=0.0)
    assert nx.is_isomorphic(nx.Graph(list(t.edges)), nx.cycle_graph(8))


def test_ws_guards_and_determinism():
    with pytest.raises(ValueError):
        gen_ws(6, K=6)
    assert gen_ws(50, seed=4) == gen_ws(50, seed=4)
    assert _connected(gen_ws(50, seed=4))


def test_ba_counts_and_seed_graph():
    assert gen_ba(5, 5, 2).edges == tuple(nx.path_graph(5).edges)
    t = gen_ba(30, 5, 3, seed=2)
    assert len(t.edges) == 4 + (30 - 5) * 3
    assert len(set(t.edges)) == len(t.edges)


def test_ba_has_heavier_tail_than_er():
    wins = 0
    for s in range(50):
        ba = nx.Graph(list(gen_ba(100, 5, 5, seed=s).edges))
        er = nx.Graph(list(gen_er(100, seed=s).edges))
        wins += max(d for _, d in ba.degree) > max(d for _, d in er.degree)
    assert wins == 50


# ---- priorities and costs --------------------------------------------------------------

def test_exponential_sizes():
    prio = assign_priorities(64, 3, "exponential", seed=0)
    sizes = [sum(1 for p in prio if p >= i) for i in (1, 2, 3)]
    assert sizes == [32, 16, 8]


def test_linear_sizes_follow_formula():
    prio = assign_priorities(12, 3, "linear", seed=0)
    assert [sum(1 for p in prio if p >= i) for i in (1, 2, 3)] == [9, 6, 3]
    # n (1 - 1/2) for n = 4 and one level
    assert sum(1 for p in assign_priorities(4, 1, "linear", seed=0) if p) == 2


def test_top_level_never_empty():
    for seed in range(20):
        assert 3 in assign_priorities(3, 3, "exponential", seed)


def test_priorities_guard_levels():
    with pytest.raises(ValueError):
        assign_priorities(3, 4, "linear", 0)


def test_cost_schemes():
    for c in assign_costs(200, 4, "prop", seed=1):
        assert all(c[i] == (i + 1) * c[0] for i in range(4))
        assert 1 <= c[0] <= 10
    for c in assign_costs(200, 4, "nonprop", seed=1):
        steps = [c[0]] + [b - a for a, b in zip(c, c[1:])]
        assert all(1 <= s <= 10 for s in steps)


@pytest.mark.parametrize("model", ["er", "ws", "ba"])
@pytest.mark.parametrize("te", ["prop", "nonprop"])
def test_generated_instances_valid_and_nested(model, te):
    for seed in range(10):
        g = generate(GenSpec(model, n=14, ell=3, tsm="linear", te=te, seed=seed))
        assert validate_instance(g) == []
        assert terminal_set(g, 3) <= terminal_set(g, 2) <= terminal_set(g, 1)
        assert is_proportional(g) == (te == "prop")


def test_same_spec_same_bytes():
    spec = GenSpec("ba", n=25, ell=3, tsm="exponential", te="nonprop", seed=99)
    assert dumps(generate(spec)) == dumps(generate(spec))


@pytest.mark.parametrize("name", sorted(SNAPSHOT_SPECS))
def test_snapshots(name):
    spec = SNAPSHOT_SPECS[name]
    assert dumps(generate(spec), [spec.describe()]) == (SNAPSHOTS / f"{name}.mlst").read_text()


# ---- adversarial families ----------------------------------------------------------------

def test_imase_waxman_sizes():
    vertices = 2
    for k in range(0, 7):
        iw = gen_imase_waxman(k)
        assert iw.graph.num_edges == 4 ** k
        assert iw.graph.num_vertices == vertices
        assert len(iw.graph.terminals) == 2 ** k + 1
        vertices += 2 * 4 ** k
    with pytest.raises(ValueError):
        gen_imase_waxman(7)


def test_imase_waxman_base_and_costs():
    g = gen_imase_waxman(0).graph
    assert g.num_vertices == 2 and g.edges[0].costs == (1.0,)
    g3 = gen_imase_waxman(3).graph
    assert {e.costs for e in g3.edges} == {(1 / 8,)}


def test_imase_waxman_terminals_form_a_path():
    iw = gen_imase_waxman(3)
    G = nx.Graph([(e.u, e.v) for e in iw.graph.edges])
    for a, b in zip(iw.terminal_path, iw.terminal_path[1:]):
        assert G.has_edge(a, b)
    assert {iw.terminal_path[0], iw.terminal_path[-1]} == {0, 1}


def test_imase_waxman_opt_two():
    assert brute_force_opt(gen_imase_waxman(2).graph, max_edges=16, max_vertices=12).opt == pytest.approx(1.0)


def test_prim_bad_shape():
    g = gen_prim_bad(4, 0.1)
    assert g.num_vertices == 5 and g.num_edges == 5
    assert g.priority == (4, 1, 2, 3, 4)
    assert g.edges[0].costs == pytest.approx((0.9, 1.8, 2.7, 3.6))


def test_adversarial_cycle_small():
    g = gen_adversarial_cycle(4, eps=0.5, seed=1)
    assert validate_instance(g) == []
    assert g.priority == (2, 1, 1, 2)
    path = sum(e.costs[0] for e in g.edges[:3])
    assert g.edges[3].costs[0] == pytest.approx(path - 0.5)
    assert is_proportional(g)
    assert not is_proportional(gen_adversarial_cycle(6, seed=2, scheme="nonprop"))


def test_adversarial_cycle_chords_do_not_undercut_path():
    g = gen_adversarial_cycle(10, extra_edges=6, seed=3)
    assert g.num_edges == 10 + 6
    for e in g.edges[10:]:
        a, b = sorted((e.u, e.v))
        along = sum(g.edges[j].costs[0] for j in range(a, b))
        assert e.costs[0] > along
