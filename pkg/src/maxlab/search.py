"""Norm ratios ``||M f||_p / ||f||_p``, extremal search and constant formulas."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .bellman import theorem_constants
from .covering import besicovitch_bound, layer_cake_constant
from .exceptions import ConfigurationError, DegenerateInputError, DimensionError, InvalidParameterError
from .grid import Box, GridFunction, lp_norm
from .operators import (
    MaximalField,
    OperatorSpec,
    dyadic_maximal,
    lambda_maximal,
    one_sided_maximal,
    one_sided_superlevel,
)

OPERATORS = ("uncentered-box", "lambda-box", "lambda-ball2", "centered-ball2", "dyadic", "one-sided")


@dataclass(frozen=True)
class Operator:
    """A named maximal operator.

    ``lam`` applies to the lambda families; ``levels`` and ``root`` to the
    dyadic operator (by default the root is the smallest aligned cube with
    corner at the grid origin that holds the grid).
    """

    name: str = "uncentered-box"
    lam: float = 1.0
    levels: int | None = None
    root: Box | None = None
    ratio: float = 2.0**0.25

    def __post_init__(self):
        if self.name not in OPERATORS:
            raise ConfigurationError(f"unknown operator {self.name!r}; expected one of {OPERATORS}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParameterError(f"lambda must lie in [0, 1], got {self.lam}")

    @property
    def tag(self) -> str:
        if self.name in ("lambda-box", "lambda-ball2"):
            return f"{self.name}(lambda={self.lam:g})"
        return self.name


def _dyadic_root(g: GridFunction, op: Operator):
    if op.root is not None and op.levels is not None:
        return op.root, op.levels
    levels = op.levels
    if levels is None:
        levels = max(0, math.ceil(math.log2(max(g.shape))))
    side = g.h * 2**levels
    root = op.root or Box(g.lower, g.lower + side)
    return root, levels


def apply_operator(g: GridFunction, op: Operator) -> MaximalField:
    if op.name == "uncentered-box":
        return lambda_maximal(g, OperatorSpec(family="box", lam=1.0))
    if op.name == "lambda-box":
        return lambda_maximal(g, OperatorSpec(family="box", lam=op.lam))
    if op.name == "lambda-ball2":
        return lambda_maximal(g, OperatorSpec(family="ball2", lam=op.lam, mode="ladder", ratio=op.ratio))
    if op.name == "centered-ball2":
        return lambda_maximal(g, OperatorSpec(family="ball2", lam=0.0, mode="ladder", ratio=op.ratio))
    if op.name == "dyadic":
        root, levels = _dyadic_root(g, op)
        return dyadic_maximal(g, root, levels)
    return one_sided_maximal(g)


def theoretical_constant(op: Operator, p: float, n: int) -> dict:
    """Lower-bound constant the ratio is compared against, with its provenance."""
    sharp = (p / (p - 1.0)) ** (1.0 / p)
    if op.name == "uncentered-box" or (op.name == "lambda-box" and op.lam == 1.0):
        return {"value": sharp, "source": "parallelepipeds, (p/(p-1))^(1/p)"}
    if op.name == "one-sided":
        return {"value": sharp, "source": "one-sided intervals, (p/(p-1))^(1/p)"}
    if op.name == "dyadic":
        return {"value": theorem_constants(p, 2.0**n, n)["dyadic"], "source": "dyadic cubes"}
    if op.name == "lambda-ball2" and op.lam == 1.0:
        return {"value": layer_cake_constant(p, besicovitch_bound(n)), "source": "covering chain, B(n) = 5^n"}
    if op.name == "centered-ball2":
        return {"value": 1.0, "source": "none: no bound above 1 holds for centered operators"}
    return {"value": 1.0, "source": "non-constructive for lambda < 1; trivial bound Mf >= f"}


def _tail_estimate(g: GridFunction, op: Operator, p: float):
    """Exact ``L^p`` mass of ``M f`` outside the declared domain, when available."""
    if g.dim != 1:
        return None
    v = np.ascontiguousarray(g.values, dtype=float)
    if op.name == "uncentered-box" or (op.name == "lambda-box" and op.lam == 1.0):
        return _kernels.right_maximal_left_tail(v, g.h, p) + _kernels.right_maximal_left_tail(v[::-1].copy(), g.h, p)
    if op.name == "one-sided":
        return _kernels.right_maximal_left_tail(v, g.h, p)
    if op.name == "dyadic":
        root, levels = _dyadic_root(g, op)
        if np.allclose(root.lo, g.lower) and math.isclose(root.hi[0], g.upper[0]):
            return _kernels.dyadic_tail(g.total_mass(), root.sides[0], p)
    return None


def _exact_inner(g: GridFunction, op: Operator, p: float):
    """Exact ``int (M f)**p`` over a 1D grid (cell-center sampling elsewhere)."""
    v = np.ascontiguousarray(g.values, dtype=float)
    if op.name == "uncentered-box" or (op.name == "lambda-box" and op.lam == 1.0):
        return _kernels.uncentered_inner_p(v, g.h, p)
    if op.name == "one-sided":
        return _kernels.one_sided_inner_p(v, g.h, p)
    return None


@dataclass
class RatioReport:
    p: float
    operator: str
    norm_f: float
    norm_Mf: float
    ratio: float
    constant: float
    margin: float
    grid: dict
    truncation: dict = field(default_factory=dict)
    constant_source: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def ratio(g: GridFunction, op: Operator | str = "uncentered-box", p: float = 2.0, mf: MaximalField | None = None) -> RatioReport:
    """``||M f||_p / ||f||_p`` with both norms taken over the grid's bounding box.

    The report's ``truncation`` entry records the domain and, for 1D
    operators, the exact norm mass of ``M f`` outside it together with the
    ratio that includes it.  For the 1D uncentered and one-sided operators
    ``ratio_exact`` also replaces cell-center sampling inside the grid by
    the exact integral.
    """
    if isinstance(op, str):
        op = Operator(op)
    if not p > 1:
        raise InvalidParameterError(f"p must exceed 1, got {p}")
    if op.name == "one-sided" and g.dim != 1:
        raise DimensionError("the one-sided operator is defined on the line only")
    nf = lp_norm(g, p)
    if nf <= 0:
        raise DegenerateInputError("f vanishes identically")
    mf = mf or apply_operator(g, op)
    nm = lp_norm(mf.field, p)
    r = nm / nf
    const = theoretical_constant(op, p, g.dim)
    tail = _tail_estimate(g, op, p)
    trunc = {"domain": g.bounding_box.to_list(), "tail": tail}
    if tail is not None:
        trunc["ratio_with_tail"] = ((nm**p + tail) / nf**p) ** (1.0 / p)
        inner = _exact_inner(g, op, p)
        if inner is not None:
            trunc["ratio_exact"] = ((inner + tail) / nf**p) ** (1.0 / p)
    grid = {"shape": list(g.shape), "origin": list(g.origin), "h": g.h}
    return RatioReport(p, op.tag, nf, nm, r, const["value"], r - const["value"], grid, trunc, const["source"])


# -- extremal search ----------------------------------------------------------


@dataclass(frozen=True)
class AnnealConfig:
    """Annealing schedule and move mix (all probabilities per step)."""

    t_start: float = 1e-2
    t_end: float = 1e-5
    sigma: float = 0.3
    p_zero: float = 0.02
    p_grow: float = 0.1
    init: str = "random"


_FAST = {"uncentered-box": _kernels.KIND_UNCENTERED, "dyadic": _kernels.KIND_DYADIC, "one-sided": _kernels.KIND_ONE_SIDED}


@dataclass
class SearchResult:
    best: GridFunction
    report: RatioReport
    trace: list
    seed: int
    objective: str

    def trace_tsv(self) -> str:
        return "step\tratio\n" + "".join(f"{s}\t{r!r}\n" for s, r in self.trace)


def _initial(shape, seed: int, init: str) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if init == "random":
        return rng.random(shape) + 1e-3
    if init == "indicator":
        return np.ones(shape)
    raise ConfigurationError(f"unknown init {init!r}")


def minimize_ratio(
    op: Operator | str,
    p: float,
    shape,
    budget: int,
    seed: int = 0,
    config: AnnealConfig | None = None,
    h: float | None = None,
    pad: int | None = None,
) -> SearchResult:
    """Simulated annealing over nonnegative cell values for a small ratio.

    In 1D the uncentered, one-sided and dyadic objectives are exact on the
    whole line: ``f`` lives on ``N`` cells and the norm of ``M f`` outside
    them is integrated in closed form.  Other operators are evaluated on the
    grid with ``pad`` zero cells on every side (default ``N // 2``).  The
    trace lists ``(step, best ratio)`` at every improvement.
    """
    if isinstance(op, str):
        op = Operator(op)
    if budget <= 0:
        raise ConfigurationError("budget must be positive")
    if not p > 1:
        raise InvalidParameterError(f"p must exceed 1, got {p}")
    config = config or AnnealConfig()
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    n = len(shape)
    h = 1.0 / shape[0] if h is None else float(h)
    v0 = _initial(shape, seed, config.init)
    if n == 1 and op.name in _FAST and (op.name != "dyadic" or shape[0] & (shape[0] - 1) == 0):
        kind = _FAST[op.name]
        v, best, steps, vals = _kernels.anneal(
            v0.astype(float), h, float(p), kind, int(budget), int(seed) % 2**32,
            config.t_start, config.t_end, config.sigma, config.p_zero, config.p_grow,
        )
        best_f = GridFunction(v, (0.0,), h)
        nf = lp_norm(best_f, p)
        const = theoretical_constant(op, p, 1)
        r = best ** (1.0 / p)
        rep = RatioReport(
            p, op.tag, nf, r * nf, r, const["value"], r - const["value"],
            {"shape": list(shape), "origin": [0.0], "h": h},
            {"domain": "whole line", "tail": "exact"}, const["source"],
        )
        trace = [(int(s), float(x) ** (1.0 / p)) for s, x in zip(steps, vals)]
        return SearchResult(best_f, rep, trace, seed, "whole-line")
    if op.name == "dyadic":
        raise ConfigurationError("dyadic search needs a 1D grid with a power-of-two size")
    return _generic_anneal(op, p, shape, budget, seed, config, h, pad, v0)


def _generic_anneal(op, p, shape, budget, seed, config, h, pad, v0) -> SearchResult:
    pad = max(s for s in shape) // 2 if pad is None else pad
    rng = np.random.default_rng(seed)
    full = tuple(s + 2 * pad for s in shape)
    inner = tuple(slice(pad, pad + s) for s in shape)
    origin = tuple(-pad * h for _ in shape)

    def value(v):
        buf = np.zeros(full)
        buf[inner] = v
        g = GridFunction(buf, origin, h)
        return ratio(g, op, p).ratio ** p

    v = v0 / (np.sum(v0**p) * h ** len(shape)) ** (1.0 / p)
    cur = value(v)
    best, best_v = cur, v.copy()
    trace = [(0, cur ** (1.0 / p))]
    for k in range(budget):
        temp = config.t_start * (config.t_end / config.t_start) ** (k / max(budget - 1, 1))
        idx = tuple(int(rng.integers(s)) for s in shape)
        old = v[idx]
        u = rng.random()
        w = v.copy()
        if u < config.p_zero:
            w[idx] = 0.0
        elif u < config.p_zero + config.p_grow:
            axis = int(rng.integers(len(shape)))
            nb = list(idx)
            nb[axis] = min(max(nb[axis] + (1 if rng.random() < 0.5 else -1), 0), shape[axis] - 1)
            w[idx] = v[tuple(nb)] * (0.5 + rng.random())
        else:
            w[idx] = old * math.exp(config.sigma * rng.standard_normal()) if old > 0 else rng.random()
        if not np.any(w > 0):
            continue
        w /= (np.sum(w**p) * h ** len(shape)) ** (1.0 / p)
        cand = value(w)
        if cand <= cur or rng.random() < math.exp(-(cand - cur) / temp):
            v, cur = w, cand
            if cur < best:
                best, best_v = cur, v.copy()
                trace.append((k + 1, cur ** (1.0 / p)))
    buf = np.zeros(full)
    buf[inner] = best_v
    rep = ratio(GridFunction(buf, origin, h), op, p)
    return SearchResult(GridFunction(best_v, tuple(0.0 for _ in shape), h), rep, trace, seed, "padded-grid")


def search_seeds(op, p, shape, budget, seeds, config=None, h=None) -> list:
    """Independent chains, one per seed, returned in seed order."""
    return [minimize_ratio(op, p, shape, budget, s, config, h) for s in seeds]


# -- one-sided identity and constants -------------------------------------------


def grafakos_check(g: GridFunction, t_grid) -> list:
    """``t |{M_R f > t}|`` against ``int_{M_R f > t} f`` for each level.

    The superlevel sets are exact unions of intervals, so residuals reflect
    floating point only.  Residuals are relative to
    ``max(lhs, rhs, ||f||_1 t / diam)``.
    """
    if g.dim != 1:
        raise DimensionError("the identity is one-dimensional")
    l1 = g.total_mass()
    diam = float(g.upper[0] - g.lower[0])
    rows = []
    for t in np.atleast_1d(np.asarray(t_grid, dtype=float)):
        if not t > 0:
            raise InvalidParameterError("levels must be positive")
        s = one_sided_superlevel(g, float(t))
        lhs = float(t) * s.measure
        rhs = s.mass
        scale = max(lhs, rhs, l1 * float(t) / diam)
        rows.append({"t": float(t), "lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / scale if scale > 0 else 0.0})
    return rows


@dataclass(frozen=True)
class BoundResult:
    value: float | None
    value_p: float | None
    numerator: float
    denominator: float
    diagnostic: str | None = None


def almost_centered_bound(n: int, p: float, lam: float, eps: float, eta: float, B: float | None = None) -> BoundResult:
    """Lower-bound constant for the almost centered operator given ``eps`` and ``eta``.

    ``A**p = 1 + N / D`` with ``N = 1 - (1 - eps)**(-n - p) + 1 / (B (p - 1))``
    and ``D = p / (eta (p - 1) lam**(-n (p - 1))) + (1 - eps)**(-n - p)``.
    When ``N <= 0`` no bound follows and only a diagnostic is returned.
    """
    if not 0 < lam < 1:
        raise InvalidParameterError(f"lambda must lie in (0, 1), got {lam}")
    if not p > 1:
        raise InvalidParameterError("p must exceed 1")
    if not 0 < eps < 1:
        raise InvalidParameterError("eps must lie in (0, 1)")
    if not eta > 0:
        raise InvalidParameterError("eta must be positive")
    if n < 1:
        raise InvalidParameterError("dimension must be >= 1")
    B = float(besicovitch_bound(n) if B is None else B)
    shrink = (1.0 - eps) ** (-n - p)
    num = 1.0 - shrink + 1.0 / (B * (p - 1.0))
    den = p / (eta * (p - 1.0) * lam ** (-n * (p - 1.0))) + shrink
    if num <= 0:
        return BoundResult(None, None, num, den, "epsilon too large")
    ap = 1.0 + num / den
    return BoundResult(ap ** (1.0 / p), ap, num, den)


__all__ = [
    "OPERATORS",
    "Operator",
    "RatioReport",
    "AnnealConfig",
    "SearchResult",
    "BoundResult",
    "apply_operator",
    "theoretical_constant",
    "ratio",
    "minimize_ratio",
    "search_seeds",
    "grafakos_check",
    "almost_centered_bound",
]
