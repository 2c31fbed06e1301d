import re
from pathlib import Path

import pytest

from mlst.graph import terminal_set, validate_instance
from mlst.instance_io import dumps, loads
from mlst.steinlib import (
    StpError,
    StpInstance,
    augment_priorities,
    derive,
    extend_costs,
    filter_priorities,
    parse_stp,
    read_stp,
)

DATA = Path(__file__).parent / "data"

TINY = """33D32945 STP File, STP Format Version 1.0
SECTION Comment
Name "tiny"
END
SECTION Graph
Nodes 2
Edges 1
E 1 2 7
END
SECTION Terminals
Terminals 1
T 2
END
EOF
"""


def ring(n, terminals):
    edges = [(i, (i + 1) % n, float(i + 1)) for i in range(n)]
    return StpInstance(n, edges, list(terminals))


def test_minimal_file():
    inst = parse_stp(TINY)
    assert inst.num_vertices == 2
    assert inst.edges == [(0, 1, 7.0)]
    assert inst.terminals == [1]
    assert inst.name == "tiny"


def test_bundled_tiny_matches_inline():
    assert read_stp(DATA / "tiny.stp") == parse_stp(TINY)


def test_case_and_blank_lines_are_tolerated():
    text = TINY.replace("SECTION Graph", "section graph\n\n").replace("Nodes", "NODES")
    assert parse_stp(text).num_vertices == 2


def test_missing_terminals_section():
    text = TINY.split("SECTION Terminals")[0] + "EOF\n"
    with pytest.raises(StpError, match="Terminals"):
        parse_stp(text)


@pytest.mark.parametrize("old,new,needle", [
    ("E 1 2 7", "E 1 3 7", "out of range"),
    ("E 1 2 7", "E 1 2 x", "line 8"),
    ("T 2", "T 9", "terminal id 9"),
    ("Edges 1", "Edges 2", "declares 2"),
    ("E 1 2 7", "Q 1 2 7", "unknown Graph record"),
    ("E 1 2 7", "E 1 2 -3", "negative"),
])
def test_malformed_input(old, new, needle):
    with pytest.raises(StpError, match=needle):
        parse_stp(TINY.replace(old, new))


def test_unclosed_section():
    with pytest.raises(StpError, match="not closed"):
        parse_stp(TINY.replace("END\nSECTION Terminals", "SECTION Terminals"))


def test_i080_sample_counts_match_header():
    text = (DATA / "i080_sample.stp").read_text()
    inst = parse_stp(text)
    nodes = int(re.search(r"^Nodes (\d+)", text, re.M).group(1))
    edges = int(re.search(r"^Edges (\d+)", text, re.M).group(1))
    terms = int(re.search(r"^Terminals (\d+)", text, re.M).group(1))
    assert (inst.num_vertices, len(inst.edges), len(inst.terminals)) == (nodes, edges, terms)
    assert (nodes, edges) == (80, 120)


# ---- priority derivation ------------------------------------------------------------

def test_filter_single_level():
    g = filter_priorities(ring(8, [0, 2, 4]), 1)
    assert [p for p in g.priority if p] == [1, 1, 1]


def test_filter_one_terminal_per_level():
    g = filter_priorities(ring(8, [0, 2, 4, 6]), 4, seed=3)
    assert sorted(p for p in g.priority if p) == [1, 2, 3, 4]


def test_filter_remainder_goes_low():
    g = filter_priorities(ring(10, range(7)), 3, seed=1)
    counts = [g.priority.count(p) for p in (1, 2, 3)]
    assert counts == [3, 2, 2]


def test_filter_is_seeded():
    inst = ring(12, range(9))
    assert filter_priorities(inst, 3, seed=5) == filter_priorities(inst, 3, seed=5)
    assert any(filter_priorities(inst, 3, seed=s) != filter_priorities(inst, 3, seed=5) for s in range(5))


def test_filter_needs_enough_terminals():
    with pytest.raises(ValueError):
        filter_priorities(ring(5, [0]), 2)


def test_augment_two_levels():
    g = augment_priorities(ring(20, [1, 3, 5]), 2, seed=0)
    assert len(terminal_set(g, 2)) == 5 and len(terminal_set(g, 1)) == 10
    assert {1, 3, 5} <= terminal_set(g, 2)


def test_augment_single_level_keeps_originals():
    g = augment_priorities(ring(20, [1, 3, 5]), 1)
    assert terminal_set(g, 1) == {1, 3, 5}


def test_augment_caps_at_vertex_count():
    g = augment_priorities(ring(7, [0]), 3, seed=2)
    assert len(terminal_set(g, 3)) == 5
    assert terminal_set(g, 1) == set(range(7))


def test_augment_needs_five_vertices():
    with pytest.raises(ValueError):
        augment_priorities(ring(4, [0]), 2)


def test_cost_extensions():
    inst = ring(6, [0, 3])
    for (_, _, w), (_, _, cs) in zip(inst.edges, extend_costs(inst, 3, "prop")):
        assert cs == [w, 2 * w, 3 * w]
    for (_, _, w), (_, _, cs) in zip(inst.edges, extend_costs(inst, 3, "nonprop", seed=1)):
        assert cs[0] == w and all(1 <= b - a <= 10 for a, b in zip(cs, cs[1:]))


@pytest.mark.parametrize("mode", ["filter", "augment"])
@pytest.mark.parametrize("te", ["prop", "nonprop"])
def test_derived_sample_instances(mode, te):
    inst = read_stp(DATA / "i080_sample.stp")
    for ell in (2, 3, 4):
        g = derive(inst, mode, ell, seed=ell, scheme=te)
        assert validate_instance(g) == []
        assert [(e.u, e.v, e.costs[0]) for e in g.edges] == inst.edges
        text = dumps(g)
        assert dumps(loads(text)) == text


def test_unknown_mode():
    with pytest.raises(ValueError):
        derive(ring(6, [0, 1]), "sample", 2)
