"""Canonical line-oriented instance format.

::

    # optional comments
    mlst <n> <m> <ell>
    e <u> <v> <c1> ... <c_ell>
    p <v> <priority>

Vertex ids are 0-based; only terminals get ``p`` lines.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, TextIO, Union

from .graph import MultiLevelGraph


class FormatError(ValueError):
    pass


def format_number(x: float) -> str:
    """Shortest text that parses back to exactly ``x``; integral values print bare."""
    if math.isfinite(x) and x == int(x) and abs(x) < 2**53:
        return str(int(x))
    return repr(float(x))


def dumps(g: MultiLevelGraph, comments: Iterable[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"mlst {g.num_vertices} {g.num_edges} {g.num_levels}")
    for e in g.edges:
        lines.append(" ".join(["e", str(e.u), str(e.v)] + [format_number(c) for c in e.costs]))
    for v, p in enumerate(g.priority):
        if p > 0:
            lines.append(f"p {v} {p}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> MultiLevelGraph:
    header = None
    edges = []
    priority: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            if tok[0] == "mlst":
                if header is not None:
                    raise FormatError(f"line {lineno}: duplicate header")
                if len(tok) != 4:
                    raise FormatError(f"line {lineno}: header needs 'mlst n m ell'")
                header = (int(tok[1]), int(tok[2]), int(tok[3]))
            elif header is None:
                raise FormatError(f"line {lineno}: record before 'mlst' header")
            elif tok[0] == "e":
                ell = header[2]
                if len(tok) != 3 + ell:
                    raise FormatError(f"line {lineno}: edge needs {ell} costs, got {len(tok) - 3}")
                edges.append((int(tok[1]), int(tok[2]), [float(c) for c in tok[3:]]))
            elif tok[0] == "p":
                if len(tok) != 3:
                    raise FormatError(f"line {lineno}: priority line needs 'p v priority'")
                priority[int(tok[1])] = int(tok[2])
            else:
                raise FormatError(f"line {lineno}: unknown record '{tok[0]}'")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from None
    if header is None:
        raise FormatError("missing 'mlst' header")
    n, m, ell = header
    if len(edges) != m:
        raise FormatError(f"header declares {m} edges, found {len(edges)}")
    for v in priority:
        if not 0 <= v < n:
            raise FormatError(f"priority given for vertex {v} outside 0..{n - 1}")
    return MultiLevelGraph.build(n, edges, ell, priority)


def read_instance(src: Union[str, Path, TextIO]) -> MultiLevelGraph:
    if hasattr(src, "read"):
        return loads(src.read())
    return loads(Path(src).read_text())


def write_instance(g: MultiLevelGraph, dst: Union[str, Path, TextIO], comments: Iterable[str] = ()) -> None:
    text = dumps(g, comments)
    if hasattr(dst, "write"):
        dst.write(text)
    else:
        Path(dst).write_text(text)
