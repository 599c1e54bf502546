"""Command line front end: ``maxlab <command> [options]``.

Every command prints a JSON report (sorted keys) that embeds the resolved
configuration, and with ``--out DIR`` also writes it and any artifacts
(``.ggrid`` fields, tree JSON, CSV or TSV tables) into ``DIR``.  Failures
print one line ``error code=<code> message=<text>`` to stderr and exit
with status 2.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bellman, covering, operators, partition, search
from .exceptions import ConfigurationError, MaxlabError
from .grid import BodySpec, GridFunction, indicator_grid, read_ggrid, sample_grid, write_ggrid

BUILTINS = ("indicator", "linear_ramp", "superharmonic3d", "random")
COMMANDS = (
    "maximal", "ratio", "optimize", "bellman-verify", "partition", "cover",
    "dichotomy", "stein", "grafakos", "constants", "counterexample",
)


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


# -- grids --------------------------------------------------------------------


def builtin_grid(name: str, n: int | None = None, dim: int | None = None, seed: int = 0) -> GridFunction:
    """Named test densities.

    ``indicator``: 1D indicator of [0, 1] on [-64, 65] (4096 cells).
    ``linear_ramp``: ``f(x) = x_1`` on the unit cube (64 cells per axis, 2D).
    ``superharmonic3d``: ``min(|x|**-1, 1)`` on [-8, 8]^3 (32 cells per axis).
    ``random``: uniform values on the unit cube (32 cells per axis, 2D).
    """
    if name == "indicator":
        if dim not in (None, 1):
            raise ConfigurationError("the indicator builtin is one-dimensional")
        n = n or 4096
        return indicator_grid((0.0,), (1.0,), (-64.0,), 129.0 / n, (n,))
    if name == "linear_ramp":
        dim = dim or 2
        n = n or 64
        return sample_grid(lambda x: x[..., 0], (0.0,) * dim, 1.0 / n, (n,) * dim)
    if name == "superharmonic3d":
        n = n or 32
        return sample_grid(operators.superharmonic_profile(3), (-8.0,) * 3, 16.0 / n, (n,) * 3)
    if name == "random":
        dim = dim or 2
        n = n or 32
        rng = np.random.default_rng(seed)
        return GridFunction(rng.random((n,) * dim), (0.0,) * dim, 1.0 / n)
    raise ConfigurationError(f"unknown builtin {name!r}; expected one of {BUILTINS}")


def _grid(args) -> GridFunction:
    if args.grid:
        if not Path(args.grid).is_file():
            raise CliError("unreadable-grid", f"{args.grid}: no such file")
        try:
            return read_ggrid(args.grid)
        except OSError as exc:
            raise CliError("unreadable-grid", f"{args.grid}: {exc.strerror or exc}") from exc
    return builtin_grid(args.builtin or "random", args.n, args.dim, args.seed)


def _operator(args, default: str = "uncentered-box") -> search.Operator:
    name = args.op or default
    lam = args.lam if args.lam is not None else (1.0 if name in ("uncentered-box", "lambda-box", "lambda-ball2") else 0.0)
    if name in ("uncentered-box", "dyadic", "one-sided"):
        lam = 1.0
    return search.Operator(name, lam=lam, levels=args.levels)


# -- output -------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _emit(args, report: dict, artifacts: dict | None = None) -> None:
    report = dict(report)
    report["config"] = _config(args)
    text = dumps(report)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text)
        for name, content in (artifacts or {}).items():
            path = out / name
            if isinstance(content, GridFunction):
                write_ggrid(content, path)
            else:
                path.write_text(content)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


# -- commands -----------------------------------------------------------------


def cmd_maximal(args):
    g = _grid(args)
    op = _operator(args)
    mf = search.apply_operator(g, op)
    report = {
        "operator": op.tag,
        "shape": list(g.shape),
        "max_f": float(g.values.max()),
        "max_Mf": float(mf.values.max()),
        "min_Mf_minus_f": float(np.min(mf.values - g.values)),
        "constant": search.theoretical_constant(op, args.p, g.dim),
    }
    _emit(args, report, {"maximal.ggrid": mf.field})


def cmd_ratio(args):
    g = _grid(args)
    rep = search.ratio(g, _operator(args), args.p)
    _emit(args, rep.to_dict())


def cmd_optimize(args):
    op = _operator(args)
    shape = (args.n or 256,) * (args.dim or 1)
    seeds = args.seeds if args.seeds else [args.seed]
    results = search.search_seeds(op, args.p, shape, args.budget, seeds)
    best = min(results, key=lambda r: (r.report.ratio, r.seed))
    report = {
        "operator": op.tag,
        "p": args.p,
        "constant": best.report.constant,
        "best_ratio": best.report.ratio,
        "best_seed": best.seed,
        "runs": [{"seed": r.seed, "ratio": r.report.ratio, "improvements": len(r.trace), "objective": r.objective} for r in results],
    }
    artifacts = {}
    for r in results:
        artifacts[f"trace_seed{r.seed}.tsv"] = r.trace_tsv()
        artifacts[f"best_seed{r.seed}.ggrid"] = r.best
    _emit(args, report, artifacts)


def _stop(args):
    if args.max_depth is None and args.min_diam is None:
        return None, 1.0 / 16
    return args.max_depth, args.min_diam


def cmd_bellman_verify(args):
    g = _grid(args)
    lam = args.lam if args.lam is not None else 1.5
    if not lam > 1:
        raise CliError("invalid-parameter", "bellman-verify needs --lambda > 1 (density parameter)")
    max_depth, min_diam = _stop(args)
    tree = partition.build_filtration(g, g.bounding_box, lam, max_depth, min_diam, p=args.p)
    margins = bellman.tree_margins(tree)
    mq = operators.lambda_maximal(g, operators.OperatorSpec(family="box", lam=1.0))
    cert = bellman.lemma_certificate(g, tree.root, tree, args.p, lam, mq, tol=args.tol)
    worst = min((m for _, m in margins), default=0.0)
    report = {
        "lambda": lam,
        "p": args.p,
        "nodes": tree.n_nodes,
        "internal_nodes": len(margins),
        "min_main_inequality_margin": worst,
        "main_inequality_passed": worst >= -args.tol,
        "certificate": cert,
        "constants": bellman.theorem_constants(args.p, lam, g.dim),
    }
    _emit(args, report, {"certificate.json": dumps(cert)})


def cmd_partition(args):
    g = _grid(args)
    lam = args.lam if args.lam is not None else 1.5
    max_depth, min_diam = _stop(args)
    tree = partition.build_filtration(g, g.bounding_box, lam, max_depth, min_diam, p=args.p)
    check = partition.verify_density(tree, g, lam)
    report = {"lambda": lam, "nodes": tree.n_nodes, "verify_density": check, "tree": tree.to_dict()}
    artifacts = {"tree.json": dumps(tree.to_dict())}
    if args.svg and g.dim == 2:
        artifacts["partition.svg"] = partition.tree_to_svg(tree)
    _emit(args, report, artifacts)


def cmd_cover(args):
    g = _grid(args)
    top = float(g.values.max())
    if args.t is not None:
        ladder = [args.t]
    else:
        ladder = np.geomspace(top * 1e-2, top * 0.99, args.levels_count).tolist()
    rep = covering.layer_cake_report(g, args.p, ladder, args.delta, family=args.family)
    rep["besicovitch_bound"] = covering.besicovitch_bound(g.dim)
    _emit(args, rep, {"cover.csv": covering.rows_to_csv(rep["rows"])})


def cmd_dichotomy(args):
    g = _grid(args)
    lam = args.lam if args.lam is not None else 0.5
    box = g.bounding_box
    K = BodySpec("box", tuple(box.center), tuple(box.sides / 2))
    verdict = covering.dichotomy_check(g, K, lam, args.eps, args.eta)
    _emit(args, {"lambda": lam, "eps": args.eps, "eta": args.eta, "body": K.to_dict(), **verdict})


def cmd_stein(args):
    g = _grid(args)
    rep = covering.stein_check(g, g.bounding_box)
    _emit(args, rep)


def cmd_grafakos(args):
    g = _grid(args)
    if g.dim != 1:
        raise CliError("dimension", "grafakos needs a 1D grid")
    top = float(operators.one_sided_maximal(g).values.max())
    ladder = np.geomspace(top * 1e-2, top * 0.99, args.levels_count)
    rows = search.grafakos_check(g, ladder)
    worst = max(r["residual"] for r in rows)
    tsv = "t\tlhs\trhs\tresidual\n" + "".join(f"{r['t']!r}\t{r['lhs']!r}\t{r['rhs']!r}\t{r['residual']!r}\n" for r in rows)
    _emit(args, {"rows": rows, "max_residual": worst, "passed": worst <= args.tol}, {"grafakos.tsv": tsv})


def cmd_constants(args):
    n = args.dim or 1
    p = args.p
    limit = (p / (p - 1.0)) ** (1.0 / p) if p > 1 else None
    if args.lambda_limit:
        if limit is None:
            raise CliError("invalid-exponent", "p must exceed 1")
        sys.stdout.write(f"{limit:.6f}\n")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "constants.json").write_text(dumps({"limit": limit, "config": _config(args)}))
        return
    lam = args.lam if args.lam is not None else 2.0**n
    report = {"theorem": bellman.theorem_constants(p, lam, n) if lam > 1 else None}
    report["layer_cake_A"] = covering.layer_cake_constant(p, covering.besicovitch_bound(n))
    if 0 < lam < 1:
        b = search.almost_centered_bound(n, p, lam, args.eps, args.eta)
        report["almost_centered"] = {"value": b.value, "diagnostic": b.diagnostic}
    _emit(args, report)


def cmd_counterexample(args):
    rep = operators.centered_counterexample_report(N=args.n or 64, L=args.L)
    _emit(args, rep)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--grid", metavar="PATH", help="read a .ggrid file")
    src.add_argument("--builtin", choices=BUILTINS, help="named test density")
    common.add_argument("--n", type=int, default=None, help="cells per axis for builtins / search")
    common.add_argument("--dim", type=int, default=None, help="dimension for builtins / search")
    common.add_argument("--op", choices=search.OPERATORS, default=None)
    common.add_argument("--lambda", dest="lam", type=float, default=None)
    common.add_argument("--p", type=float, default=2.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", metavar="DIR", default=None)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--levels", type=int, default=None, help="dyadic levels")

    parser = _Parser(prog="maxlab", description="Maximal function lower-bound laboratory.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, **kw):
        sp = sub.add_parser(name, parents=[common], **kw)
        sp.set_defaults(func=func)
        return sp

    add("maximal", cmd_maximal)
    add("ratio", cmd_ratio)
    sp = add("optimize", cmd_optimize)
    sp.add_argument("--budget", type=int, default=10_000)
    sp.add_argument("--seeds", type=int, nargs="*", default=None)
    for name, func in (("bellman-verify", cmd_bellman_verify), ("partition", cmd_partition)):
        sp = add(name, func)
        sp.add_argument("--max-depth", type=int, default=None)
        sp.add_argument("--min-diam", type=float, default=None)
        if name == "partition":
            sp.add_argument("--svg", action="store_true")
    sp = add("cover", cmd_cover)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--levels-count", type=int, default=30)
    sp.add_argument("--delta", type=float, default=1e-3)
    sp.add_argument("--family", choices=("box", "ballinf", "ball1", "ball2"), default="box")
    sp = add("dichotomy", cmd_dichotomy)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--eta", type=float, default=0.1)
    add("stein", cmd_stein)
    sp = add("grafakos", cmd_grafakos)
    sp.add_argument("--levels-count", type=int, default=20)
    sp = add("constants", cmd_constants)
    sp.add_argument("--lambda-limit", action="store_true")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--eta", type=float, default=0.1)
    sp = add("counterexample", cmd_counterexample)
    sp.add_argument("--L", type=float, default=8.0)
    return parser


def _cap_threads() -> None:
    value = os.environ.get("MAXLAB_THREADS")
    if not value:
        return
    try:
        k = int(value)
    except ValueError as exc:
        raise CliError("configuration", f"MAXLAB_THREADS must be an integer, got {value!r}") from exc
    if k < 1:
        raise CliError("configuration", "MAXLAB_THREADS must be >= 1")
    import numba

    numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _cap_threads()
        args.func(args)
        return 0
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except MaxlabError as exc:
        code, msg = exc.code, str(exc)
    except OSError as exc:
        code, msg = "io", str(exc)
    sys.stderr.write(f"error code={code} message={' '.join(msg.split())}\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
