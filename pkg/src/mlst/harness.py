"""Batch experiments: generate instances, run algorithms, compare with OPT.

A config is a JSON object::

    {
      "generators": ["er", "ws", "ba"],
      "n": [8, 10], "ell": [2, 3],
      "tsm": ["linear", "exponential"], "te": ["prop", "nonprop"],
      "repetitions": 5,
      "algorithms": ["kruskal", "c2a"],
      "compare": ["kruskal", "c2a"],
      "master_seed": 0,
      "exact_budget": {"method": "dp", "max_vertices": 12},
      "gen_params": {"ws": {"K": 4}},
      "workers": 1
    }

Scalars are accepted wherever a list is. Records come back in spec order no
matter how many workers ran, so the CSVs are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .algorithms import ALGORITHMS, PROPORTIONAL_ONLY, approximation_bound, is_proportional, run_algorithm
from .exact import BudgetExceeded, exact_opt
from .generators import GenSpec, generate
from .graph import TOL, validate_solution

CONFIG_KEYS = {
    "generators", "n", "ell", "tsm", "te", "repetitions", "algorithms", "compare", "master_seed",
    "exact_budget", "gen_params", "workers",
}
GROUP_DIMS = {"n": "n", "ell": "ell", "tsm": "tsm", "te": "te", "generator": "generator"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    generators: list[str]
    n: list[int]
    ell: list[int]
    tsm: list[str] = field(default_factory=lambda: ["linear"])
    te: list[str] = field(default_factory=lambda: ["prop"])
    repetitions: int = 1
    algorithms: list[str] = field(default_factory=lambda: ["kruskal"])
    compare: Optional[list[str]] = None
    master_seed: int = 0
    exact_budget: dict = field(default_factory=lambda: {"method": "dp", "max_vertices": 12})
    gen_params: dict = field(default_factory=dict)
    workers: int = 1

    def specs(self) -> list[GenSpec]:
        out = []
        combos = itertools.product(self.generators, self.n, self.ell, self.tsm, self.te, range(self.repetitions))
        for model, n, ell, tsm, te, rep in combos:
            seed = random.Random(f"{self.master_seed}:{model}:{n}:{ell}:{tsm}:{te}:{rep}").getrandbits(32)
            extra = dict(self.gen_params.get(model, {}))
            out.append(GenSpec(model, n=n, ell=ell, tsm=tsm, te=te, seed=seed, **extra))
        return out


def _as_list(value, key: str, kind) -> list:
    items = value if isinstance(value, list) else [value]
    for x in items:
        if not isinstance(x, kind) or isinstance(x, bool):
            raise ConfigError(f"{key}: expected {kind.__name__} values, got {x!r}")
    return items


def load_config(source) -> ExperimentConfig:
    """Parse and check a config from a dict, a JSON string or a path."""
    if isinstance(source, dict):
        raw = source
    else:
        if isinstance(source, str) and source.lstrip()[:1] in ("{", "["):
            text = source
        else:
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("generators", "n", "ell"):
        if key not in raw:
            raise ConfigError(f"config needs '{key}'")
    cfg = ExperimentConfig(
        generators=_as_list(raw["generators"], "generators", str),
        n=_as_list(raw["n"], "n", int),
        ell=_as_list(raw["ell"], "ell", int),
        tsm=_as_list(raw.get("tsm", "linear"), "tsm", str),
        te=_as_list(raw.get("te", "prop"), "te", str),
        repetitions=raw.get("repetitions", 1),
        algorithms=_as_list(raw.get("algorithms", "kruskal"), "algorithms", str),
        compare=raw.get("compare"),
        master_seed=raw.get("master_seed", 0),
        exact_budget=raw.get("exact_budget", {"method": "dp", "max_vertices": 12}),
        gen_params=raw.get("gen_params", {}),
        workers=raw.get("workers", 1),
    )
    for key in ("repetitions", "master_seed", "workers"):
        val = getattr(cfg, key)
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise ConfigError(f"{key} must be a non-negative integer")
    if cfg.repetitions < 1 or cfg.workers < 1:
        raise ConfigError("repetitions and workers must be at least 1")
    for a in cfg.algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}")
    for t in cfg.tsm:
        if t not in ("linear", "exponential"):
            raise ConfigError(f"unknown tsm {t!r}")
    for t in cfg.te:
        if t not in ("prop", "nonprop"):
            raise ConfigError(f"unknown te {t!r}")
    for gname in cfg.generators:
        if gname not in ("er", "ws", "ba"):
            raise ConfigError(f"unknown generator {gname!r}")
    if cfg.compare is not None:
        if not (isinstance(cfg.compare, list) and len(cfg.compare) == 2
                and all(c in cfg.algorithms for c in cfg.compare)):
            raise ConfigError("compare must name two of the configured algorithms")
    if not isinstance(cfg.exact_budget, dict) or not isinstance(cfg.gen_params, dict):
        raise ConfigError("exact_budget and gen_params must be objects")
    return cfg


@dataclass
class ExperimentRecord:
    instance: str
    generator: str
    n: int
    ell: int
    tsm: str
    te: str
    seed: int
    algorithm: str
    cost: float
    opt: Optional[float]
    ratio: Optional[float]
    feasible: bool
    within_bound: Optional[bool]
    num_terminals: int
    num_edges: int
    alg_time: float = 0.0
    exact_time: float = 0.0


TIMING_FIELDS = ("alg_time", "exact_time")


def _run_one(args) -> list[ExperimentRecord]:
    spec, algorithms, budget = args
    g = generate(spec)
    budget = dict(budget)
    method = budget.pop("method", "dp")
    t0 = time.perf_counter()
    try:
        opt = exact_opt(g, method, **budget).opt
    except BudgetExceeded:
        opt = None
    exact_time = time.perf_counter() - t0
    prop = is_proportional(g)
    tag = f"{spec.model}-n{spec.n}-l{spec.ell}-{spec.tsm}-{spec.te}-s{spec.seed}"
    out = []
    for name in algorithms:
        if name in PROPORTIONAL_ONLY and not prop:
            continue
        t1 = time.perf_counter()
        sol, _ = run_algorithm(name, g)
        alg_time = time.perf_counter() - t1
        feasible = not validate_solution(g, sol)
        ratio = within = None
        if opt is not None:
            ratio = sol.cost / opt if opt > 0 else (1.0 if sol.cost <= TOL else math.inf)
            bound = approximation_bound(name, g)
            within = None if bound is None else sol.cost <= bound * opt + 1e-9
        out.append(ExperimentRecord(tag, spec.model, g.num_vertices, spec.ell, spec.tsm, spec.te, spec.seed,
                                    name, sol.cost, opt, ratio, feasible, within, len(g.terminals),
                                    g.num_edges, alg_time, exact_time))
    return out


def run_experiment(config) -> list[ExperimentRecord]:
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    jobs = [(spec, cfg.algorithms, cfg.exact_budget) for spec in cfg.specs()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(_run_one, jobs))
    else:
        batches = [_run_one(j) for j in jobs]
    return [r for batch in batches for r in batch]


@dataclass
class StatsSummary:
    algorithm: str
    group: str
    count: int
    equal_to_opt: int
    mean: float
    median: float
    min: float
    max: float
    best_approx: Optional[float] = None


def _stats(algorithm: str, group: str, ratios: Sequence[float], best: Optional[float] = None) -> StatsSummary:
    return StatsSummary(algorithm, group, len(ratios), sum(1 for r in ratios if abs(r - 1) <= 1e-9),
                        statistics.fmean(ratios), statistics.median(ratios), min(ratios), max(ratios), best)


def summarize(records: Iterable[ExperimentRecord], algo_a: str, algo_b: str,
              group: str = "all") -> tuple[StatsSummary, StatsSummary]:
    """Ratio statistics for two algorithms over the instances both solved.

    Best-approx is the share of instances where one is strictly better; ties
    count for neither side.
    """
    by_inst: dict[str, dict[str, float]] = {}
    for r in records:
        if r.ratio is not None and r.algorithm in (algo_a, algo_b):
            by_inst.setdefault(r.instance, {})[r.algorithm] = r.ratio
    pairs = [(d[algo_a], d[algo_b]) for d in by_inst.values() if algo_a in d and algo_b in d]
    if not pairs:
        raise ValueError(f"no instance has ratios for both {algo_a} and {algo_b}")
    ra = [a for a, _ in pairs]
    rb = [b for _, b in pairs]
    wins_a = sum(1 for a, b in pairs if a < b - 1e-9)
    wins_b = sum(1 for a, b in pairs if b < a - 1e-9)
    total = len(pairs)
    return (_stats(algo_a, group, ra, 100.0 * wins_a / total),
            _stats(algo_b, group, rb, 100.0 * wins_b / total))


def summarize_all(records: Sequence[ExperimentRecord], compare: Optional[Sequence[str]] = None) -> list[StatsSummary]:
    """Per generator (plus "all") stats for every algorithm; best-approx only for the compared pair."""
    out = []
    groups = ["all"] + sorted({r.generator for r in records})
    algorithms = list(dict.fromkeys(r.algorithm for r in records))
    for grp in groups:
        sub = [r for r in records if grp == "all" or r.generator == grp]
        done = set()
        if compare:
            try:
                out.extend(summarize(sub, compare[0], compare[1], grp))
                done.update(compare)
            except ValueError:
                pass
        for a in algorithms:
            if a in done:
                continue
            ratios = [r.ratio for r in sub if r.algorithm == a and r.ratio is not None]
            if ratios:
                out.append(_stats(a, grp, ratios))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def emit_csv(rows: Sequence, sink: Optional[TextIO] = None, kind=None, timing: bool = False) -> str:
    """CSV of records or summaries; header order follows the dataclass fields.

    Timing columns are left out unless asked for, since they differ per run.
    """
    kind = kind or (type(rows[0]) if rows else ExperimentRecord)
    names = [f.name for f in fields(kind) if timing or f.name not in TIMING_FIELDS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in rows:
        d = asdict(row)
        w.writerow([_fmt(d[k]) for k in names])
    text = buf.getvalue()
    if sink is not None:
        sink.write(text)
    return text


BOXPLOT_HEADER = ["group_by", "value", "algorithm", "count", "min", "q1", "median", "q3", "max"]


def emit_boxplot_data(records: Sequence[ExperimentRecord], group_by: str = "ell") -> str:
    """Five-number summaries of the ratio per (group value, algorithm)."""
    if group_by not in GROUP_DIMS:
        raise ValueError(f"cannot group by {group_by!r}; choose from {sorted(GROUP_DIMS)}")
    attr = GROUP_DIMS[group_by]
    groups: dict[tuple, list[float]] = {}
    for r in records:
        if r.ratio is not None:
            groups.setdefault((getattr(r, attr), r.algorithm), []).append(r.ratio)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOXPLOT_HEADER)
    for (value, algo) in sorted(groups, key=lambda k: (str(type(k[0])), k[0], k[1])):
        vals = np.asarray(groups[(value, algo)], dtype=float)
        q = np.percentile(vals, [0, 25, 50, 75, 100])
        w.writerow([group_by, value, algo, len(vals)] + [f"{x:.10g}" for x in q])
    return buf.getvalue()


def write_outputs(records: Sequence[ExperimentRecord], out_dir, compare: Optional[Sequence[str]] = None,
                  dims: Sequence[str] = ("n", "ell", "tsm")) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "records.csv", out / "summary.csv"]
    paths[0].write_text(emit_csv(records, kind=ExperimentRecord))
    paths[1].write_text(emit_csv(summarize_all(records, compare), kind=StatsSummary))
    for dim in dims:
        p = out / f"boxplot_{dim}.csv"
        p.write_text(emit_boxplot_data(records, dim))
        paths.append(p)
    return paths
