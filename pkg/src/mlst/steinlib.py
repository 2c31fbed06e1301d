"""SteinLib STP reader and the two ways of turning its terminals into priorities.

Only the Comment, Graph and Terminals sections are interpreted; other sections
(coordinates, presolve data, ...) are skipped.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .graph import MultiLevelGraph

AUGMENT_TOP = 5


class StpError(ValueError):
    def __init__(self, message: str, line: int | None = None, token: str | None = None):
        where = f"line {line}: " if line is not None else ""
        what = f" (token {token!r})" if token is not None else ""
        super().__init__(f"{where}{message}{what}")
        self.line = line
        self.token = token


@dataclass
class StpInstance:
    num_vertices: int
    edges: list[tuple[int, int, float]]
    terminals: list[int]
    name: str = ""
    comments: dict[str, str] = field(default_factory=dict)


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise StpError("expected an integer", lineno, tok) from None


def _num(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise StpError("expected a number", lineno, tok) from None


def parse_stp(text: str) -> StpInstance:
    lines = text.splitlines()
    section = None
    seen: set[str] = set()
    n = m_decl = t_decl = None
    edges: list[tuple[int, int, float]] = []
    terms: list[int] = []
    comments: dict[str, str] = {}
    edge_lines: list[int] = []
    term_lines: list[int] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        key = tok[0].lower()
        if section is None:
            if key == "section":
                if len(tok) < 2:
                    raise StpError("SECTION without a name", lineno)
                section = tok[1].lower()
                if section in seen:
                    raise StpError(f"duplicate section {tok[1]}", lineno)
                seen.add(section)
            elif key == "eof":
                break
            elif lineno == 1 or key.startswith("33d32945"):
                continue
            else:
                raise StpError("expected SECTION or EOF", lineno, tok[0])
            continue
        if key == "end":
            section = None
            continue
        if key in ("section", "eof"):
            raise StpError(f"section {section} is not closed with END", lineno, tok[0])
        if section == "comment":
            comments[tok[0].lower()] = line[len(tok[0]):].strip().strip('"')
        elif section == "graph":
            if key == "nodes":
                n = _int(tok[1], lineno) if len(tok) == 2 else None
                if n is None:
                    raise StpError("Nodes needs one count", lineno)
            elif key == "edges" or key == "arcs":
                if len(tok) != 2:
                    raise StpError(f"{tok[0]} needs one count", lineno)
                m_decl = _int(tok[1], lineno)
            elif key in ("e", "a"):
                if len(tok) != 4:
                    raise StpError("edge needs 'E u v w'", lineno)
                edges.append((_int(tok[1], lineno) - 1, _int(tok[2], lineno) - 1, _num(tok[3], lineno)))
                edge_lines.append(lineno)
            else:
                raise StpError("unknown Graph record", lineno, tok[0])
        elif section == "terminals":
            if key == "terminals":
                if len(tok) != 2:
                    raise StpError("Terminals needs one count", lineno)
                t_decl = _int(tok[1], lineno)
            elif key == "t":
                if len(tok) != 2:
                    raise StpError("terminal needs 'T v'", lineno)
                terms.append(_int(tok[1], lineno) - 1)
                term_lines.append(lineno)
            elif key == "root":
                continue
            else:
                raise StpError("unknown Terminals record", lineno, tok[0])
        # any other section is ignored
    if section is not None:
        raise StpError(f"section {section} is not closed with END")
    for name in ("graph", "terminals"):
        if name not in seen:
            raise StpError(f"missing section {name.capitalize()}")
    if n is None:
        raise StpError("Graph section lacks a Nodes line")
    for (u, v, w), lineno in zip(edges, edge_lines):
        for x in (u, v):
            if not 0 <= x < n:
                raise StpError(f"vertex id {x + 1} out of range 1..{n}", lineno)
        if w < 0:
            raise StpError("negative edge weight", lineno)
    for t, lineno in zip(terms, term_lines):
        if not 0 <= t < n:
            raise StpError(f"terminal id {t + 1} out of range 1..{n}", lineno)
    if m_decl is not None and m_decl != len(edges):
        raise StpError(f"Edges declares {m_decl}, found {len(edges)}")
    if t_decl is not None and t_decl != len(terms):
        raise StpError(f"Terminals declares {t_decl}, found {len(terms)}")
    if len(set(terms)) != len(terms):
        raise StpError("duplicate terminal")
    return StpInstance(n, edges, terms, comments.get("name", ""), comments)


def read_stp(path: Union[str, Path]) -> StpInstance:
    return parse_stp(Path(path).read_text())


def extend_costs(inst: StpInstance, ell: int, scheme: str = "prop", seed: int = 0) -> list[tuple[int, int, list[float]]]:
    """Base weight is c1; "prop" scales it by i, "nonprop" adds random 1..10 steps."""
    if scheme not in ("prop", "nonprop"):
        raise ValueError(f"unknown cost scheme {scheme!r}")
    rng = random.Random(seed)
    out = []
    for u, v, w in inst.edges:
        if scheme == "prop":
            costs = [i * w for i in range(1, ell + 1)]
        else:
            costs = [w]
            for _ in range(ell - 1):
                costs.append(costs[-1] + rng.randint(1, 10))
        out.append((u, v, costs))
    return out


def _graph(inst: StpInstance, ell: int, priority: dict[int, int], scheme: str, seed: int) -> MultiLevelGraph:
    return MultiLevelGraph.build(inst.num_vertices, extend_costs(inst, ell, scheme, seed + 1), ell, priority)


def filter_priorities(inst: StpInstance, ell: int, seed: int = 0, scheme: str = "prop") -> MultiLevelGraph:
    """Split the original terminals into ``ell`` near-equal random groups.

    The first group gets priority ell, the next ell - 1, and so on; leftover
    terminals go to the lowest levels.
    """
    if ell < 1:
        raise ValueError("ell must be positive")
    if len(inst.terminals) < ell:
        raise ValueError(f"{len(inst.terminals)} terminals cannot fill {ell} levels")
    order = sorted(inst.terminals)
    random.Random(seed).shuffle(order)
    base, extra = divmod(len(order), ell)
    priority: dict[int, int] = {}
    pos = 0
    for j in range(1, ell + 1):
        size = base + (1 if j > ell - extra else 0)
        for t in order[pos:pos + size]:
            priority[t] = ell - j + 1
        pos += size
    return _graph(inst, ell, priority, scheme, seed)


def augment_priorities(inst: StpInstance, ell: int, seed: int = 0, scheme: str = "prop") -> MultiLevelGraph:
    """Five top terminals, then the cumulative count doubles per level down.

    ell = 1 keeps the original terminal set.  Picks draw from original
    terminals first, then from other vertices; counts are capped at |V|.
    """
    n = inst.num_vertices
    if n < AUGMENT_TOP:
        raise ValueError(f"augmenting needs at least {AUGMENT_TOP} vertices, got {n}")
    if ell < 1:
        raise ValueError("ell must be positive")
    if ell == 1:
        return _graph(inst, 1, {t: 1 for t in inst.terminals}, scheme, seed)
    rng = random.Random(seed)
    originals = sorted(inst.terminals)
    rng.shuffle(originals)
    others = sorted(set(range(n)) - set(inst.terminals))
    rng.shuffle(others)
    pool = originals + others
    priority: dict[int, int] = {}
    taken = 0
    for level in range(ell, 0, -1):
        want = min(n, AUGMENT_TOP * 2 ** (ell - level))
        for v in pool[taken:want]:
            priority[v] = level
        taken = max(taken, want)
    return _graph(inst, ell, priority, scheme, seed)


def derive(inst: StpInstance, mode: str, ell: int, seed: int = 0, scheme: str = "prop") -> MultiLevelGraph:
    if mode == "filter":
        return filter_priorities(inst, ell, seed, scheme)
    if mode == "augment":
        return augment_priorities(inst, ell, seed, scheme)
    raise ValueError(f"unknown mode {mode!r}; use filter or augment")
