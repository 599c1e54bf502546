"""Level families, greedy Besicovitch covers and the overlap function psi.

For a level ``t`` every point with ``f(x) > t`` is the center of a body whose
average is ``t`` (up to a relative tolerance ``delta``).  A greedy pass keeps
a bounded-overlap subfamily whose counting function ``psi`` satisfies the
identity ``int t psi = int psi f`` level by level.

Integrals of ``psi`` are accumulated body by body from exact masses and
volumes, so they carry no discretization error beyond ``delta``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    InvalidLevelError,
    InvalidParameterError,
)
from .grid import (
    DEFAULT_SUBSAMPLE,
    BodySpec,
    GridFunction,
    SummedTable,
    as_box,
    ball_mass_and_volume,
    body_average,
)
from .operators import OperatorSpec, augment_with_bodies, lambda_maximal

_GROWTH = 1.25
_MAX_BISECT = 200


def besicovitch_bound(n: int) -> int:
    return 5**n


def _mass_volume(g: GridFunction, body: BodySpec, table: SummedTable, subsample: int):
    if body.q == math.inf:
        bb = body.bounding_box()
        return float(table.box_sum(bb.lo, bb.hi)), body.volume()
    return ball_mass_and_volume(g, body, subsample)


def _box_avg(table: SummedTable, centers: np.ndarray, s: np.ndarray, shape: np.ndarray) -> np.ndarray:
    half = s[:, None] * shape[None, :]
    return table.box_sum(centers - half, centers + half) / np.prod(2 * half, axis=1)


def level_family(
    g: GridFunction,
    t: float,
    delta: float = 1e-3,
    family: str = "box",
    centers=None,
    shape=None,
    subsample: int = DEFAULT_SUBSAMPLE,
) -> list:
    """Bodies centered at points with ``f > t`` whose average is ``t`` within ``delta * t``.

    Scales grow geometrically from one cell until the average drops to ``t``,
    then bisection refines the scale.  ``centers`` defaults to all cell
    centers; ``shape`` gives the relative half-widths of the base body.
    """
    if not t > 0:
        raise InvalidLevelError(f"level t must be positive, got {t}")
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    base = np.ones(g.dim) if shape is None else np.asarray(shape, dtype=float)
    base = base / base.max()
    pts = g.cell_centers().reshape(-1, g.dim) if centers is None else np.atleast_2d(np.asarray(centers, dtype=float))
    if centers is None:
        fx = g.values.ravel()
    else:
        idx = np.clip(np.floor((pts - g.lower) / g.h).astype(int), 0, np.asarray(g.shape) - 1)
        fx = g.values[tuple(idx.T)]
    inside = np.all((pts >= g.lower) & (pts < g.upper), axis=1)
    fx = np.where(inside, fx, 0.0)
    keep = fx > t
    pts = pts[keep]
    if pts.shape[0] == 0:
        return []
    table = SummedTable(g)
    s0 = 0.5 * g.h / base.min()

    if family in ("box", "ballinf"):
        def avg(c, s):
            return _box_avg(table, c, s, base)
    else:
        def avg(c, s):
            return np.array([
                body_average(g, BodySpec(family, tuple(ci), tuple(si * base)), subsample, table)
                for ci, si in zip(c, s)
            ])

    k = pts.shape[0]
    lo = np.full(k, s0)
    hi = np.full(k, s0)
    val = avg(pts, hi)
    pending = val > t
    lo_val = val.copy()
    while pending.any():
        idx = np.flatnonzero(pending)
        lo[idx] = hi[idx]
        lo_val[idx] = val[idx]
        hi[idx] = hi[idx] * _GROWTH
        val[idx] = avg(pts[idx], hi[idx])
        pending[idx] = val[idx] > t

    # bisection on [lo, hi] where avg(lo) > t >= avg(hi)
    best_s = hi.copy()
    best_v = val.copy()
    done = np.abs(best_v - t) <= delta * t
    for _ in range(_MAX_BISECT):
        if done.all():
            break
        idx = np.flatnonzero(~done)
        mid = 0.5 * (lo[idx] + hi[idx])
        v = avg(pts[idx], mid)
        above = v > t
        lo[idx[above]] = mid[above]
        hi[idx[~above]] = mid[~above]
        better = np.abs(v - t) < np.abs(best_v[idx] - t)
        best_s[idx[better]] = mid[better]
        best_v[idx[better]] = v[better]
        done[idx] = np.abs(best_v[idx] - t) <= delta * t
    out = []
    for c, s, v, ok in zip(pts, best_s, best_v, done):
        if ok:
            out.append(BodySpec(family, tuple(c), tuple(s * base)))
    return out


def _contains_matrix(bodies, points: np.ndarray) -> np.ndarray:
    centers = np.array([b.center for b in bodies])
    widths = np.array([b.half_widths for b in bodies])
    q = bodies[0].q
    u = np.abs(points[None, :, :] - centers[:, None, :]) / widths[:, None, :]
    if q == math.inf:
        gauge = u.max(axis=-1)
    elif q == 1.0:
        gauge = u.sum(axis=-1)
    else:
        gauge = np.sqrt((u**2).sum(axis=-1))
    return gauge <= 1.0 + 1e-12


def besicovitch_extract(bodies) -> list:
    """Greedy subfamily covering every input center.

    Repeatedly pick, among bodies whose centers are still uncovered, one of
    maximal volume (lowest input index on ties) and mark the centers it
    contains.
    """
    bodies = list(bodies)
    if not bodies:
        return []
    kinds = {b.kind for b in bodies}
    if len(kinds) != 1:
        raise ConfigurationError("bodies must share one kind")
    centers = np.array([b.center for b in bodies])
    vol = np.array([b.volume() for b in bodies])
    order = np.lexsort((np.arange(len(bodies)), -vol))
    covered = np.zeros(len(bodies), dtype=bool)
    selected = []
    for i in order:
        if covered[i]:
            continue
        selected.append(bodies[i])
        covered |= bodies[i].contains(centers)
    return selected


def max_overlap(bodies, points=None) -> int:
    """Largest number of bodies sharing a point.

    For boxes the maximum over the arrangement is attained at a point whose
    coordinates are lower faces of the boxes; those points are checked when
    ``points`` is omitted (otherwise only ``points`` are).
    """
    if not bodies:
        return 0
    if points is None:
        if bodies[0].q != math.inf:
            raise ConfigurationError("give sample points for non-box bodies")
        lows = np.array([np.asarray(b.center) - np.asarray(b.half_widths) for b in bodies])
        axes = [np.unique(lows[:, k]) for k in range(lows.shape[1])]
        pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    else:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
    best = 0
    chunk = max(1, 2_000_000 // len(bodies))
    for start in range(0, pts.shape[0], chunk):
        best = max(best, int(_contains_matrix(bodies, pts[start : start + chunk]).sum(axis=0).max()))
    return best


def count_field(g: GridFunction, bodies) -> np.ndarray:
    """Number of ``bodies`` containing each cell center."""
    out = np.zeros(g.shape, dtype=np.int64)
    if not bodies:
        return out
    pts = g.cell_centers().reshape(-1, g.dim)
    flat = out.reshape(-1)
    chunk = max(1, 2_000_000 // pts.shape[0])
    for start in range(0, len(bodies), chunk):
        flat += _contains_matrix(bodies[start : start + chunk], pts).sum(axis=0)
    return out


@dataclass
class LevelSetCover:
    t: float
    delta: float
    selected: list
    psi: GridFunction
    report: dict = field(default_factory=dict)
    psi1: list | None = None
    psi2: list | None = None
    psi2_eps: GridFunction | None = None

    def to_dict(self) -> dict:
        out = {"t": self.t, "delta": self.delta, "selected": [b.to_dict() for b in self.selected], "report": self.report}
        if self.psi1 is not None:
            out["psi1"] = [b.to_dict() for b in self.psi1]
            out["psi2"] = [b.to_dict() for b in self.psi2]
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def csv_row(self) -> dict:
        r = self.report
        return {
            "t": self.t,
            "selected": len(self.selected),
            "max_psi": r["max_psi"],
            "prop2_worst": r["prop2_worst"],
            "prop3_worst": r["prop3_worst"],
            "prop4_residual": r["prop4_residual"],
        }


def _uncentered_field(g: GridFunction, family: str, bodies, lam: float = 1.0):
    if family in ("box", "ballinf"):
        spec = OperatorSpec(family=family, lam=lam, mode="exact_small")
    else:
        spec = OperatorSpec(family=family, lam=lam, mode="ladder")
    mf = lambda_maximal(g, spec)
    if bodies:
        mf = augment_with_bodies(mf, g, bodies, lam)
    return mf


def build_psi(
    selected,
    g: GridFunction,
    t: float,
    delta: float = 1e-3,
    m1=None,
    subsample: int = DEFAULT_SUBSAMPLE,
) -> LevelSetCover:
    """Evaluate ``psi`` for a cover at level ``t`` and check its four properties.

    ``m1`` is the uncentered maximal field; by default it is computed for
    the cover's family and raised with the selected bodies themselves.
    """
    if not t > 0:
        raise InvalidLevelError(f"level t must be positive, got {t}")
    selected = list(selected)
    psi = count_field(g, selected)
    bound = besicovitch_bound(g.dim)
    max_psi = int(psi.max()) if psi.size else 0
    table = SummedTable(g)
    mass = vol = 0.0
    for body in selected:
        m, v = _mass_volume(g, body, table, subsample)
        mass += m
        vol += v
    int_tpsi = t * vol
    int_psif = mass
    residual = abs(int_tpsi - int_psif) / int_tpsi if int_tpsi > 0 else 0.0

    if selected:
        if m1 is None:
            m1 = _uncentered_field(g, selected[0].kind, selected)
        M = m1.values
        on = psi > 0
        prop2 = float(np.max((t - M[on] * (1 + delta)) / t)) if on.any() else -math.inf
    else:
        prop2 = -math.inf
    need = g.values > t * (1 + delta)
    prop3 = int(np.count_nonzero(need & (psi < 1)))
    report = {
        "max_psi": max_psi,
        "bound": bound,
        "prop1": bool(max_psi <= bound),
        "prop2_worst": prop2,
        "prop2": bool(prop2 <= 0),
        "prop3_worst": prop3,
        "prop3": prop3 == 0,
        "int_t_psi": float(int_tpsi),
        "int_psi_f": float(int_psif),
        "prop4_residual": float(residual),
        "prop4": bool(residual <= delta * (1 + 1e-9)),
    }
    report["passed"] = bool(report["prop1"] and report["prop2"] and report["prop3"] and report["prop4"])
    return LevelSetCover(float(t), float(delta), selected, g.with_values(psi.astype(float)), report)


def cover_level(g: GridFunction, t: float, delta: float = 1e-3, family: str = "box", m1=None) -> LevelSetCover:
    """Level family, greedy extraction and ``psi`` in one call."""
    chosen = besicovitch_extract(level_family(g, t, delta, family))
    return build_psi(chosen, g, t, delta, m1)


def split_psi(cover: LevelSetCover, g: GridFunction, lam: float, eps: float, eta: float, m_lam=None) -> LevelSetCover:
    """Sort selected bodies into expanding (``psi1``) and spreading (``psi2``) ones.

    A body goes to ``psi1`` when ``int_K M_lam f >= (1 + eta) int_K f`` and
    to ``psi2`` otherwise.  ``psi2_eps`` counts the shrunken bodies
    ``(1 - eps) K`` of the second group.  The report gains the vanishing
    check: ``psi1 = 0`` wherever ``t > lam**-n M_lam f (1 + delta)``, with
    ``M_lam`` raised by the bodies ``K / lam`` (which have ``x`` in
    ``lam (K / lam) = K``).
    """
    if not 0 < lam <= 1:
        raise InvalidParameterError("lambda must lie in (0, 1]")
    if not 0 < eps < 1:
        raise InvalidParameterError("eps must lie in (0, 1)")
    kind = cover.selected[0].kind if cover.selected else "box"
    if m_lam is None:
        grown = [b.dilate(1.0 / lam) for b in cover.selected]
        m_lam = _uncentered_field(g, kind, grown, lam)
    psi1, psi2 = [], []
    for body in cover.selected:
        verdict = dichotomy_check(g, body, lam, eps, eta, m_lam)
        (psi1 if verdict["expansion"] else psi2).append(body)
    shrunk = [b.dilate(1 - eps) for b in psi2]
    n = g.dim
    p1 = count_field(g, psi1)
    thresh = lam ** (-n) * m_lam.values * (1 + cover.delta)
    viol = (p1 > 0) & (cover.t > thresh)
    vol_ok = all(math.isclose(s.volume(), (1 - eps) ** n * b.volume(), rel_tol=1e-12) for s, b in zip(shrunk, psi2))
    report = dict(cover.report)
    report.update(
        {
            "psi1_count": len(psi1),
            "psi2_count": len(psi2),
            "psi1_vanishing_violations": int(np.count_nonzero(viol)),
            "psi1_vanishing": bool(not viol.any()),
            "psi2_eps_scaling": bool(vol_ok),
        }
    )
    return LevelSetCover(
        cover.t, cover.delta, cover.selected, cover.psi, report, psi1, psi2,
        g.with_values(count_field(g, shrunk).astype(float)),
    )


def dichotomy_check(g: GridFunction, K: BodySpec, lam: float, eps: float, eta: float, m_lam=None) -> dict:
    """Which of the two alternatives holds for ``K``.

    ``expansion``: ``int_K M_lam f >= (1 + eta) int_K f``.
    ``spread``: ``M_lam f >= (1 - eps) <f>_K`` at every cell center in
    ``(1 - eps) K`` (vacuous when no center lies there).
    """
    if not 0 <= lam <= 1:
        raise InvalidParameterError("lambda must lie in [0, 1]")
    if not 0 < eps < 1:
        raise InvalidParameterError("eps must lie in (0, 1)")
    if not eta > 0:
        raise InvalidParameterError("eta must be positive")
    if m_lam is None:
        m_lam = _uncentered_field(g, K.kind, (), lam)
    table = SummedTable(g)
    f_mass, f_vol = _mass_volume(g, K, table, DEFAULT_SUBSAMPLE)
    m_mass, _ = _mass_volume(m_lam.field, K, SummedTable(m_lam.field), DEFAULT_SUBSAMPLE)
    avg = f_mass / f_vol
    ratio = m_mass / f_mass if f_mass > 0 else math.inf
    expansion = m_mass >= (1 + eta) * f_mass
    inner = K.dilate(1 - eps).contains(g.cell_centers())
    if inner.any():
        worst = float(np.min(m_lam.values[inner])) / avg if avg > 0 else math.inf
        spread = bool(np.all(m_lam.values[inner] >= (1 - eps) * avg * (1 - 1e-12)))
    else:
        worst = math.inf
        spread = True
    verdict = {(True, True): "both", (True, False): "expansion", (False, True): "spread", (False, False): "neither"}[
        (bool(expansion), spread)
    ]
    return {
        "verdict": verdict,
        "expansion": bool(expansion),
        "spread": spread,
        "expansion_ratio": float(ratio),
        "spread_worst_ratio": worst,
        "inner_cells": int(np.count_nonzero(inner)),
    }


def stein_check(g: GridFunction, K0, m0=None) -> dict:
    """``int_K0 f ln+ f`` against ``int_K0 M_0 f`` after normalizing ``<f>_K0 = 1``.

    ``f`` must vanish outside ``K0``; ``M_0`` is the centered box maximal
    function unless ``m0`` is given (it is rescaled with ``f``).
    """
    box = as_box(K0)
    table = SummedTable(g)
    mass = float(table.box_sum(box.lo, box.hi))
    if mass <= 0:
        raise DegenerateInputError("f has zero integral over K0")
    total = g.total_mass()
    if total - mass > 1e-12 * max(total, 1.0):
        raise DomainError("f must be supported in K0")
    scale = box.volume / mass
    f = g.with_values(g.values * scale)
    logged = f.with_values(f.values * np.log(np.maximum(f.values, 1.0)))
    lhs = float(SummedTable(logged).box_sum(box.lo, box.hi))
    if m0 is None:
        M = lambda_maximal(f, OperatorSpec(family="box", lam=0.0)).values
    else:
        M = m0.values * scale
    rhs = float(SummedTable(f.with_values(M)).box_sum(box.lo, box.hi))
    return {"lhs": lhs, "rhs": rhs, "empirical_C": lhs / rhs, "volume": box.volume}


def layer_cake_constant(p: float, B: float) -> float:
    """``(1 + 1 / ((p - 1) B))**(1/p)``."""
    if not p > 1:
        raise InvalidParameterError("p must exceed 1")
    if not B >= 1:
        raise InvalidParameterError("the overlap constant must be >= 1")
    return (1.0 + 1.0 / ((p - 1.0) * B)) ** (1.0 / p)


def layer_cake_report(
    g: GridFunction,
    p: float,
    t_grid,
    delta: float = 1e-3,
    family: str = "box",
    B: float | None = None,
) -> dict:
    """Both layer-cake integrals ``int int t**(p-1) psi`` and ``int int t**(p-2) psi f``.

    The ``t`` integral is a trapezoid rule over ``t_grid``; the space
    integrals are exact per level.  ``rows`` holds the per-level CSV data.
    """
    t_grid = np.asarray(sorted(float(t) for t in np.atleast_1d(t_grid)))
    if t_grid.size == 0:
        raise ConfigurationError("t ladder is empty")
    if np.any(t_grid <= 0):
        raise InvalidLevelError("all levels must be positive")
    if not p > 1:
        raise InvalidParameterError("p must exceed 1")
    m1 = None
    tpsi = np.zeros(t_grid.size)
    psif = np.zeros(t_grid.size)
    rows = []
    for i, t in enumerate(t_grid):
        bodies = besicovitch_extract(level_family(g, t, delta, family))
        if bodies and m1 is None:
            m1 = _uncentered_field(g, family, ())
        cover = build_psi(bodies, g, t, delta, augment_with_bodies(m1, g, bodies, 1.0) if bodies else None)
        tpsi[i] = cover.report["int_t_psi"] / t
        psif[i] = cover.report["int_psi_f"]
        rows.append(cover.csv_row())
    lhs = float(np.trapezoid(t_grid ** (p - 1) * tpsi, t_grid)) if t_grid.size > 1 else 0.0
    rhs = float(np.trapezoid(t_grid ** (p - 2) * psif, t_grid)) if t_grid.size > 1 else 0.0
    B = float(besicovitch_bound(g.dim) if B is None else B)
    return {
        "p": p,
        "int_t_pm1_psi": lhs,
        "int_t_pm2_psi_f": rhs,
        "relative_gap": abs(lhs - rhs) / max(abs(lhs), 1e-300) if lhs else 0.0,
        "B": B,
        "A": layer_cake_constant(p, B),
        "rows": rows,
    }


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    fields = ["t", "selected", "max_psi", "prop2_worst", "prop3_worst", "prop4_residual"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


__all__ = [
    "LevelSetCover",
    "level_family",
    "besicovitch_extract",
    "besicovitch_bound",
    "max_overlap",
    "count_field",
    "build_psi",
    "cover_level",
    "split_psi",
    "dichotomy_check",
    "stein_check",
    "layer_cake_constant",
    "layer_cake_report",
    "rows_to_csv",
]
