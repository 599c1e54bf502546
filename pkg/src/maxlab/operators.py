"""Discrete maximal operators on grid functions.

All operators return a :class:`MaximalField` whose values dominate the input
cell values: the one-cell box centered at a cell is always a candidate.

Two candidate sets are available for the lambda-centered family:

``exact_small``
    Every box whose corners lie on the half-cell lattice of the grid (cell
    boundaries and cell centers) inside the grid box.  For ``lam == 1`` this
    is the exact uncentered box maximal function at cell centers: with the
    other coordinates fixed, a box average is monotone in each face
    coordinate between lattice points, so the supremum over all real boxes
    through a point is attained on that lattice.  The cost grows like
    ``prod(N_k)**2``, so use it on small grids.

``ladder``
    Bodies centered at cell centers with half-widths on a geometric ladder.
    The computed field is a lower bound for the true supremum.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .exceptions import AlignmentError, ConfigurationError, DimensionError, InvalidParameterError
from .grid import (
    BODY_KINDS,
    DEFAULT_SUBSAMPLE,
    Box,
    BodySpec,
    GridFunction,
    SummedTable,
    _ball_weights,
    body_average,
    sample_grid,
)

_EPS = 1e-9


@dataclass(frozen=True)
class OperatorSpec:
    """Configuration of a lambda-centered maximal operator.

    ``min_scale`` and ``max_scale`` are body half-widths measured in cells;
    ``shape`` gives the relative half-widths of the base body per axis.
    ``within``, if set, discards ladder bodies not contained in that box.
    """

    family: str = "box"
    lam: float = 1.0
    mode: str = "exact_small"
    ratio: float = 2.0**0.25
    min_scale: float = 0.5
    max_scale: float | None = None
    shape: tuple | None = None
    subsample: int = DEFAULT_SUBSAMPLE
    within: Box | None = None

    def __post_init__(self):
        if self.family not in BODY_KINDS:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParameterError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.mode not in ("exact_small", "ladder"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if not self.ratio > 1.0:
            raise ConfigurationError("scale ladder ratio must exceed 1")
        if self.min_scale < 0.5:
            raise ConfigurationError("min_scale must be at least half a cell (one cell across)")
        if self.mode == "exact_small" and self.family in ("ball1", "ball2"):
            raise ConfigurationError("exact_small mode enumerates boxes; use ladder for balls")

    @property
    def tag(self) -> str:
        return f"{self.family}:lam={self.lam:g}:{self.mode}"


@dataclass(frozen=True, eq=False)
class MaximalField:
    """A computed maximal function and the family it was taken over."""

    field: GridFunction
    family: str
    argmax: list | None = None
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def _trailing_window_max(arr: np.ndarray, size: int, axis: int) -> np.ndarray:
    if size == 1:
        return arr
    return ndimage.maximum_filter1d(arr, size, axis=axis, origin=(size - 1) // 2, mode="constant", cval=-np.inf)


def _window_to_points(T: np.ndarray, axis: int, width: int, lam: float, n_points: int, lattice_len: int):
    """Spread pair averages along ``axis`` onto the cell-center points.

    ``T`` is indexed along ``axis`` by the lower endpoint ``A`` of a segment
    ``[A, A + width]`` on the half-cell lattice.  Point ``P = 2 i + 1`` (center
    of cell ``i``) collects every ``A`` with ``|P - A - width/2| <= lam*width/2``.
    """
    hi_off = math.floor(width * (1 + lam) / 2 + _EPS)
    lo_off = math.ceil(width * (1 - lam) / 2 - _EPS)
    if hi_off < lo_off:
        return None
    size = hi_off - lo_off + 1
    pad = lattice_len - T.shape[axis]
    if pad > 0:
        widths = [(0, 0)] * T.ndim
        widths[axis] = (0, pad)
        T = np.pad(T, widths, constant_values=-np.inf)
    m = _trailing_window_max(T, size, axis)
    idx = 2 * np.arange(n_points) + 1 - lo_off
    out = np.take(m, np.clip(idx, 0, None), axis=axis)
    if np.any(idx < 0):
        sl = [slice(None)] * out.ndim
        sl[axis] = idx < 0
        out[tuple(sl)] = -np.inf
    return out


def _reduce_pairs(S: np.ndarray, axis: int, lam: float, n_cells: tuple) -> np.ndarray:
    """Maximize averages over half-lattice segments on axes ``axis..n-1``.

    ``S`` is cumulative (summed, zero-padded) along those axes and already
    reduced to segment sums on earlier axes.
    """
    L = S.shape[axis] - 1
    out_shape = list(S.shape[:axis]) + list(n_cells[axis:])
    result = np.full(out_shape, -np.inf)
    last = axis == S.ndim - 1
    for width in range(1, L + 1):
        hi = np.take(S, np.arange(width, L + 1), axis=axis)
        lo = np.take(S, np.arange(0, L + 1 - width), axis=axis)
        D = (hi - lo) / width
        T = D if last else _reduce_pairs(D, axis + 1, lam, n_cells)
        spread = _window_to_points(T, axis, width, lam, n_cells[axis], L)
        if spread is not None:
            np.maximum(result, spread, out=result)
    return result


def _refined_cumulative(g: GridFunction) -> np.ndarray:
    vals = g.values
    for axis in range(g.dim):
        vals = np.repeat(vals, 2, axis=axis)
    for axis in range(g.dim):
        vals = np.cumsum(vals, axis=axis)
    return np.pad(vals, [(1, 0)] * g.dim)


def _exact_small(g: GridFunction, lam: float) -> np.ndarray:
    S = _refined_cumulative(g)
    return _reduce_pairs(S, 0, lam, g.shape)


def exact_candidates(g: GridFunction):
    """All half-lattice boxes inside the grid, in enumeration order.

    Axis 0 varies slowest; along each axis pairs are ordered by lower then
    upper endpoint.  Returns ``(lo, hi)`` arrays of shape ``(m, n)``.
    """
    per_axis = []
    for k in range(g.dim):
        pts = g.origin[k] + 0.5 * g.h * np.arange(2 * g.shape[k] + 1)
        per_axis.append([(pts[a], pts[b]) for a in range(len(pts)) for b in range(a + 1, len(pts))])
    combos = list(itertools.product(*per_axis))
    lo = np.array([[seg[0] for seg in c] for c in combos])
    hi = np.array([[seg[1] for seg in c] for c in combos])
    return lo, hi


def _argmax_exact(g: GridFunction, lam: float, M: np.ndarray, limit: float = 5e7) -> list:
    lo, hi = exact_candidates(g)
    if lo.shape[0] * M.size > limit:
        raise ConfigurationError("argmax recording is limited to small grids")
    avg = SummedTable(g).box_average(lo, hi)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    centers = g.cell_centers().reshape(-1, g.dim)
    records = []
    for flat, x in enumerate(centers):
        inside = np.all(np.abs(x - mid) <= lam * half + _EPS * g.h, axis=1)
        target = M.ravel()[flat]
        hits = np.flatnonzero(inside & (avg >= target - 1e-12 * max(target, 1e-300)))
        j = int(hits[0])
        records.append(
            {
                "cell": list(np.unravel_index(flat, g.shape)),
                "kind": "box",
                "center": mid[j].tolist(),
                "half_widths": half[j].tolist(),
            }
        )
    return records


def scale_ladder(spec: OperatorSpec, g: GridFunction) -> np.ndarray:
    """Body half-widths (in cells) visited by ladder mode."""
    top = spec.max_scale if spec.max_scale is not None else float(max(g.shape))
    if top < spec.min_scale:
        return np.array([])
    count = int(math.floor(math.log(top / spec.min_scale) / math.log(spec.ratio) + 1e-9)) + 1
    return spec.min_scale * spec.ratio ** np.arange(count)


def _base_shape(spec: OperatorSpec, dim: int) -> np.ndarray:
    if spec.shape is None:
        return np.ones(dim)
    shp = np.asarray(spec.shape, dtype=float)
    if shp.size != dim or np.any(shp <= 0):
        raise ConfigurationError("operator shape must have one positive entry per axis")
    return shp / shp.max()


def _footprint(kind: str, radii_cells: np.ndarray, dim: int):
    """Offsets (in cells) whose centers lie in a body of the given radii."""
    if np.all(radii_cells < 0.5):
        return None
    ext = np.floor(radii_cells + _EPS).astype(int)
    axes = [np.arange(-e, e + 1) / max(r, 1e-300) for e, r in zip(ext, radii_cells)]
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    if kind in ("box", "ballinf"):
        gauge = np.maximum.reduce(np.broadcast_arrays(*[np.abs(m) for m in mesh]))
    elif kind == "ball1":
        gauge = sum(np.abs(m) for m in mesh)
    else:
        gauge = np.sqrt(sum(m**2 for m in mesh))
    return np.asarray(gauge <= 1.0 + _EPS)


def _spread(avg: np.ndarray, kind: str, radii_cells: np.ndarray) -> np.ndarray:
    fp = _footprint(kind, radii_cells, avg.ndim)
    if fp is None:
        return avg
    filled = np.where(np.isfinite(avg), avg, 0.0)
    if kind in ("box", "ballinf"):
        out = filled
        for axis, r in enumerate(radii_cells):
            size = 2 * int(math.floor(r + _EPS)) + 1
            if size > 1:
                out = ndimage.maximum_filter1d(out, size, axis=axis, mode="constant", cval=0.0)
        return out
    return ndimage.maximum_filter(filled, footprint=fp, mode="constant", cval=0.0)


def _ladder(g: GridFunction, spec: OperatorSpec) -> np.ndarray:
    table = SummedTable(g)
    centers = g.cell_centers()
    base = _base_shape(spec, g.dim)
    M = np.array(g.values, dtype=float)
    for s in scale_ladder(spec, g):
        hw = s * g.h * base
        if spec.family in ("box", "ballinf"):
            flat = centers.reshape(-1, g.dim)
            avg = table.box_average(flat - hw, flat + hw).reshape(g.shape)
        else:
            mid = g.cell_centers()[(0,) * g.dim]
            start, kernel = _ball_weights(g, BodySpec(spec.family, mid, hw), spec.subsample)
            mass = signal.fftconvolve(g.values, kernel, mode="full")
            # kernel index j covers offset start + j relative to cell 0
            offs = [-int(st) for st in start]
            sl = tuple(slice(o, o + n) for o, n in zip(offs, g.shape))
            avg = np.maximum(mass[sl], 0.0) / kernel.sum()
        if spec.within is not None:
            inside = np.all(
                (centers - hw >= np.asarray(spec.within.lo) - _EPS * g.h)
                & (centers + hw <= np.asarray(spec.within.hi) + _EPS * g.h),
                axis=-1,
            )
            avg = np.where(inside, avg, -np.inf)
        spread = _spread(avg, spec.family, spec.lam * s * base)
        np.maximum(M, spread, out=M)
    return M


def augment_with_bodies(mf: MaximalField, g: GridFunction, bodies, lam: float, subsample: int = DEFAULT_SUBSAMPLE):
    """Raise ``mf`` with averages over extra family members ``bodies``.

    Each body ``S`` contributes its average to the cells whose centers lie in
    ``lam * S``.  The result is still a lower bound for the true supremum.
    """
    M = np.array(mf.values, dtype=float)
    centers = g.cell_centers()
    table = SummedTable(g)
    for body in bodies:
        avg = body_average(g, body, subsample, table)
        if lam == 0:
            region = np.zeros(g.shape, dtype=bool)
            region[g.cell_index(body.center)] = np.allclose(
                centers[g.cell_index(body.center)], body.center, atol=_EPS * g.h
            )
        else:
            region = body.dilate(lam).contains(centers, tol=_EPS)
        M = np.where(region, np.maximum(M, avg), M)
    return MaximalField(g.with_values(M), mf.family, mf.argmax, dict(mf.meta))


def lambda_maximal(g: GridFunction, spec: OperatorSpec, extra_bodies=(), record_argmax: bool = False) -> MaximalField:
    """Supremum of body averages over bodies ``S`` with ``x in lam * S``.

    Membership uses the cell center ``x``; ``lam == 0`` requires the body to
    be centered at ``x``.
    """
    if spec.mode == "exact_small":
        M = _exact_small(g, spec.lam)
    else:
        M = _ladder(g, spec)
    M = np.maximum(M, g.values)
    argmax = None
    if record_argmax:
        if spec.mode != "exact_small":
            raise ConfigurationError("argmax bodies are recorded in exact_small mode only")
        argmax = _argmax_exact(g, spec.lam, M)
    mf = MaximalField(g.with_values(M), spec.family, argmax, {"operator": spec.tag})
    if extra_bodies:
        mf = augment_with_bodies(mf, g, extra_bodies, spec.lam, spec.subsample)
    return mf


def dyadic_maximal(g: GridFunction, root: Box, levels: int) -> MaximalField:
    """Supremum over the dyadic ancestors (inside ``root``) of every cell.

    ``root`` must be a cube of side ``h * 2**levels`` whose corner lies on the
    grid lattice and which contains the grid box, so that the finest dyadic
    cubes are the grid cells.
    """
    root = Box(root.lo, root.hi)
    if root.dim != g.dim:
        raise DimensionError("root and grid dimensions differ")
    side = root.sides
    if not np.allclose(side, side[0], rtol=1e-12):
        raise AlignmentError("dyadic root must be a cube")
    if not math.isclose(side[0], g.h * 2**levels, rel_tol=1e-9):
        raise AlignmentError("root side must equal h * 2**levels")
    offset = (np.asarray(root.lo) - g.lower) / g.h
    if not np.allclose(offset, np.round(offset), atol=1e-9):
        raise AlignmentError("root corner is not on the grid lattice")
    offset = np.round(offset).astype(int)
    if np.any(offset > 0) or np.any(offset + 2**levels < np.asarray(g.shape)):
        raise AlignmentError("root cube must contain the grid box")
    n_root = 2**levels
    embed = np.zeros((n_root,) * g.dim)
    sl = tuple(slice(-o, -o + n) for o, n in zip(offset, g.shape))
    embed[sl] = g.values
    M = embed.copy()
    for k in range(1, levels + 1):
        b = 2**k
        m = n_root // b
        shape = []
        for _ in range(g.dim):
            shape += [m, b]
        means = embed.reshape(shape).mean(axis=tuple(range(1, 2 * g.dim, 2)))
        up = means
        for axis in range(g.dim):
            up = np.repeat(up, b, axis=axis)
        np.maximum(M, up, out=M)
    return MaximalField(g.with_values(M[sl]), "dyadic", None, {"root": root.to_list(), "levels": levels})


def one_sided_maximal(g: GridFunction) -> MaximalField:
    """Right-sided maximal function ``sup_{b > x} avg_{[x, b]} f`` at cell centers.

    The average over ``[x, b]`` is monotone in ``b`` inside every cell, so the
    supremum over right endpoints on cell boundaries is exact.
    """
    if g.dim != 1:
        raise DimensionError("the one-sided operator is defined on the line only")
    v = g.values
    N = v.size
    h = g.h
    F = np.concatenate([[0.0], np.cumsum(v) * h])
    M = np.empty(N)
    chunk = max(1, 2**22 // max(N, 1))
    ks = np.arange(N + 1)
    for start in range(0, N, chunk):
        i = np.arange(start, min(N, start + chunk))
        Fx = F[i] + 0.5 * h * v[i]
        xb = (ks[None, :] - i[:, None] - 0.5) * h
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = (F[None, :] - Fx[:, None]) / xb
        slope[xb <= 0] = -np.inf
        M[i] = np.max(slope, axis=1)
    M = np.maximum(M, v)
    return MaximalField(g.with_values(M), "one-sided")


@dataclass(frozen=True)
class SuperlevelSet:
    """Exact superlevel set ``{M_R f > t}`` as a union of open intervals."""

    t: float
    intervals: list
    measure: float
    mass: float


def one_sided_superlevel(g: GridFunction, t: float) -> SuperlevelSet:
    """Exact ``{x : M_R f(x) > t}`` by the rising-sun construction.

    With ``G(x) = F(x) - t x`` the set is ``{x : sup_{b > x} G(b) > G(x)}``;
    ``G`` is piecewise linear, so each cell contributes one interval that is
    found in closed form.  Returns the measure and ``int f`` over the set.
    """
    if g.dim != 1:
        raise DimensionError("the one-sided operator is defined on the line only")
    if not t > 0:
        raise InvalidParameterError("level must be positive")
    v = g.values
    N = v.size
    h = g.h
    x = g.origin[0] + h * np.arange(N + 1)
    F = np.concatenate([[0.0], np.cumsum(v) * h])
    G = F - t * x
    # sup of G on [x_k, inf): beyond the grid G decreases, so the grid end is enough
    suffix = np.maximum.accumulate(G[::-1])[::-1]
    pieces = []
    for k in range(N):
        slope = v[k] - t
        right_sup = suffix[k + 1]
        if slope > 0:
            a, b = x[k], x[k + 1]
        elif slope == 0:
            if right_sup > G[k]:
                a, b = x[k], x[k + 1]
            else:
                continue
        else:
            # G(y) < right_sup  <=>  y > x_k + (right_sup - G_k) / slope
            cut = x[k] + (right_sup - G[k]) / slope
            a, b = max(cut, x[k]), x[k + 1]
            if b <= a:
                continue
        pieces.append((a, b, v[k]))
    # left of the grid: G(y) = -t y, in the set iff y > -suffix[0] / t
    left_cut = -suffix[0] / t
    if left_cut < x[0]:
        pieces.insert(0, (left_cut, x[0], 0.0))
    intervals = []
    for a, b, _ in pieces:
        if intervals and math.isclose(intervals[-1][1], a, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(a))):
            intervals[-1][1] = b
        else:
            intervals.append([a, b])
    measure = float(sum(b - a for a, b, _ in pieces))
    mass = float(sum((b - a) * val for a, b, val in pieces))
    return SuperlevelSet(t, [tuple(iv) for iv in intervals], measure, mass)


def superharmonic_profile(n: int = 3):
    """``f(x) = min(|x|**(2 - n), 1)`` evaluated on points of shape ``(..., n)``."""

    def fn(points):
        r = np.linalg.norm(points, axis=-1)
        with np.errstate(divide="ignore"):
            return np.minimum(np.where(r > 0, r ** (2.0 - n), np.inf), 1.0)

    return fn


def centered_counterexample_report(
    N: int = 64,
    L: float = 8.0,
    ratio: float = 2.0**0.25,
    max_radius: float | None = None,
    subsample: int = DEFAULT_SUBSAMPLE,
) -> dict:
    """Centered ball maximal function of the superharmonic profile in R^3.

    Balls are centered at cell centers and must lie inside ``[-L, L]^3``.
    Interior cells are those with ``max|x_k| <= L / 2``.  The deviation
    ``(M_0 f - f) / f`` is pure discretization error because the continuum
    profile satisfies ``M_0 f = f``.
    """
    n = 3
    h = 2.0 * L / N
    g = sample_grid(superharmonic_profile(n), (-L,) * n, h, (N,) * n)
    top = (max_radius if max_radius is not None else L / 2.0) / h
    spec = OperatorSpec(
        family="ball2",
        lam=0.0,
        mode="ladder",
        ratio=ratio,
        min_scale=1.0,
        max_scale=top,
        subsample=subsample,
        within=Box((-L,) * n, (L,) * n),
    )
    mf = lambda_maximal(g, spec)
    f = g.values
    rel = (mf.values - f) / f
    centers = g.cell_centers()
    interior = np.max(np.abs(centers), axis=-1) <= L / 2.0 + 1e-12
    masked = np.where(interior, rel, -np.inf)
    worst = np.unravel_index(int(np.argmax(masked)), g.shape)

    def probe(point):
        idx = g.cell_index(point)
        return {
            "point": [float(c) for c in centers[idx]],
            "f": float(f[idx]),
            "M0f": float(mf.values[idx]),
            "relative_deviation": float(rel[idx]),
        }

    return {
        "N": N,
        "L": L,
        "h": h,
        "ladder_ratio": ratio,
        "max_radius": top * h,
        "subsample": subsample,
        "max_relative_deviation": float(masked[worst]),
        "min_relative_deviation": float(np.min(np.where(interior, rel, np.inf))),
        "worst_point": [float(c) for c in centers[worst]],
        "probe_origin": probe((0.0, 0.0, 0.0)),
        "probe_radius_two": probe((2.0, 0.0, 0.0)),
    }
