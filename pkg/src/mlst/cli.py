"""Command line entry point: ``mlst <command> ...``.

Commands print JSON lines on stdout; errors go to stderr with exit code 2
(bad input) or 1 (a produced solution failed validation).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import steinlib
from .algorithms import ALGORITHMS, approximation_bound, run_algorithm
from .exact import BudgetExceeded, build_ilp, exact_opt, write_lp
from .generators import GenSpec, generate
from .graph import InstanceError, validate_solution
from .harness import ConfigError, load_config, run_experiment, write_outputs
from .instance_io import FormatError, read_instance, write_instance


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# eps means a density factor for er, a gap for prim-bad and a shortcut saving for the cycle
EPS_DEFAULTS = {"prim-bad": 0.01, "adversarial-cycle": 0.5}


def _spec_from_args(a) -> GenSpec:
    eps = a.eps if a.eps is not None else EPS_DEFAULTS.get(a.model, 1.0)
    return GenSpec(a.model, n=a.n, ell=a.ell, tsm=a.tsm, te=a.te, seed=a.seed, eps=eps, K=a.K,
                   beta=a.beta, m0=a.m0, m=a.m, k=a.k, extra_edges=a.extra_edges)


def cmd_generate(a) -> int:
    if a.spec:
        raw = json.loads(Path(a.spec).read_text())
        try:
            specs = [GenSpec(**d) for d in (raw if isinstance(raw, list) else [raw])]
        except TypeError as exc:
            raise ValueError(f"bad spec: {exc}") from None
        out_dir = Path(a.out or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, spec in enumerate(specs):
            path = out_dir / f"{i:04d}-{spec.model}.mlst"
            write_instance(generate(spec), path, [spec.describe()])
            _emit({"file": str(path), "spec": spec.to_dict()})
        return 0
    spec = _spec_from_args(a)
    g = generate(spec)
    if a.out:
        write_instance(g, a.out, [spec.describe()])
        _emit({"file": a.out, "vertices": g.num_vertices, "edges": g.num_edges,
               "terminals": len(g.terminals)})
    else:
        write_instance(g, sys.stdout, [spec.describe()])
    return 0


def cmd_solve(a) -> int:
    g = read_instance(a.inp)
    sol, trace = run_algorithm(a.algo, g, a.root)
    problems = validate_solution(g, sol)
    _emit({"algorithm": a.algo, "cost": sol.cost, "valid": not problems, "problems": problems,
           "rates": list(sol.rates), "bound": approximation_bound(a.algo, g)})
    if a.trace and trace is not None:
        for s in trace.steps:
            _emit({"iteration": s.iteration, "terminal": s.terminal, "partner": s.partner,
                   "remaining": s.remaining, "connection_cost": s.connection_cost,
                   "path": list(s.path.vertices)})
    return 1 if problems else 0


def cmd_exact(a) -> int:
    g = read_instance(a.inp)
    res = exact_opt(g, a.method)
    _emit({"method": res.method, "opt": res.opt, "rates": list(res.solution.rates), "nodes": res.nodes,
           "valid": not validate_solution(g, res.solution)})
    return 0


def cmd_export_lp(a) -> int:
    g = read_instance(a.inp)
    model = build_ilp(g, a.root)
    with open(a.out, "w") as fh:
        write_lp(model, fh)
    _emit({"file": a.out, "constraints": len(model.constraints), "binaries": len(model.binaries)})
    return 0


def cmd_steinlib(a) -> int:
    inst = steinlib.read_stp(a.inp)
    g = steinlib.derive(inst, a.mode, a.ell, a.seed, a.te)
    write_instance(g, a.out, [f"{inst.name or Path(a.inp).stem} mode={a.mode} ell={a.ell} te={a.te} seed={a.seed}"])
    _emit({"file": a.out, "vertices": g.num_vertices, "edges": g.num_edges, "terminals": len(g.terminals)})
    return 0


def cmd_experiment(a) -> int:
    cfg = load_config(Path(a.config))
    if a.workers:
        cfg.workers = a.workers
    records = run_experiment(cfg)
    paths = write_outputs(records, a.out_dir, cfg.compare)
    bad = [r for r in records if not r.feasible]
    over = [r for r in records if r.within_bound is False]
    _emit({"records": len(records), "infeasible": len(bad), "over_bound": len(over),
           "files": [str(p) for p in paths]})
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlst", description="Multi-level Steiner tree toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random or adversarial instance")
    g.add_argument("--model", default="er",
                   choices=["er", "ws", "ba", "imase-waxman", "prim-bad", "adversarial-cycle"])
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--ell", type=int, default=2)
    g.add_argument("--tsm", default="linear", choices=["linear", "exponential"])
    g.add_argument("--te", default="prop", choices=["prop", "nonprop"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--eps", type=float, default=None)
    g.add_argument("--K", type=int, default=6)
    g.add_argument("--beta", type=float, default=0.2)
    g.add_argument("--m0", type=int, default=None)
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--extra-edges", type=int, default=0)
    g.add_argument("--spec", help="JSON file with one spec or a list of specs")
    g.add_argument("--out", help="output file (directory with --spec)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one heuristic on an instance file")
    s.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--root", type=int, default=None)
    s.add_argument("--seed", type=int, default=0, help="accepted for symmetry; all algorithms are deterministic")
    s.add_argument("--trace", action="store_true")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", help="optimal cost of a small instance")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--method", default="tree", choices=["tree", "ilp-enum", "dp"])
    e.set_defaults(func=cmd_exact)

    x = sub.add_parser("export-lp", help="write the ILP model in CPLEX LP format")
    x.add_argument("--in", dest="inp", required=True)
    x.add_argument("--out", required=True)
    x.add_argument("--root", type=int, default=None)
    x.set_defaults(func=cmd_export_lp)

    c = sub.add_parser("steinlib-convert", help="derive a multi-level instance from an STP file")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--mode", required=True, choices=["filter", "augment"])
    c.add_argument("--ell", type=int, required=True)
    c.add_argument("--te", default="prop", choices=["prop", "nonprop"])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_steinlib)

    r = sub.add_parser("experiment", help="run a batch experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, InstanceError, ConfigError, BudgetExceeded, steinlib.StpError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
