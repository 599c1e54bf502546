"""Piecewise-constant densities on uniform grids.

A :class:`GridFunction` stores one nonnegative value per cell of a uniform
n-dimensional grid (n <= 3) and is identically zero outside the grid's
bounding box.  Integrals over arbitrary real boxes are exact: the cumulative
mass function of a piecewise-constant density is multilinear inside every
cell, so multilinear interpolation of the summed table at the box corners
recovers it without discretization error.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import (
    DimensionError,
    GridFormatError,
    InvalidBodyError,
    InvalidExponentError,
    InvalidRegionError,
)

BODY_KINDS = ("box", "ball1", "ball2", "ballinf")
DEFAULT_SUBSAMPLE = 4


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative cell values on a uniform grid, zero-extended to R^n.

    Parameters
    ----------
    values : array_like
        One finite, nonnegative value per cell; ``values.ndim`` is the
        dimension (1, 2 or 3).
    origin : sequence of float
        Coordinates of the lower corner of the grid.
    h : float
        Cell side length, shared by all axes.
    """

    values: np.ndarray
    origin: tuple
    h: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2, 3):
            raise DimensionError(f"grid dimension must be 1, 2 or 3, got {values.ndim}")
        if min(values.shape) < 1:
            raise DimensionError(f"every shape entry must be >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise GridFormatError("grid values must be finite")
        if np.any(values < 0):
            raise GridFormatError("grid values must be nonnegative")
        origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        if len(origin) != values.ndim:
            raise DimensionError("origin length does not match grid dimension")
        h = float(self.h)
        if not (h > 0 and math.isfinite(h)):
            raise GridFormatError(f"cell size must be positive, got {self.h}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.origin)

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.h * np.asarray(self.shape)

    @property
    def bounding_box(self) -> "Box":
        return Box(self.lower, self.upper)

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.h * (np.arange(self.shape[axis]) + 0.5)

    def cell_centers(self) -> np.ndarray:
        """Array of shape ``(*shape, dim)`` with every cell center."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def cell_index(self, point) -> tuple:
        """Index of the cell containing ``point`` (clipped to the grid)."""
        u = (np.asarray(point, dtype=float) - self.lower) / self.h
        idx = np.clip(np.floor(u).astype(int), 0, np.asarray(self.shape) - 1)
        return tuple(int(i) for i in idx)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.origin, self.h)

    def power(self, p: float) -> "GridFunction":
        return self.with_values(self.values**p)

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)


@dataclass(frozen=True)
class Box:
    """Closed axis-parallel box ``[lo_1, hi_1] x ... x [lo_n, hi_n]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise InvalidRegionError("box corners have different dimensions")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.maximum(self.sides, 0.0)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.sides))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def is_degenerate(self) -> bool:
        return bool(np.any(self.sides <= 0))

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.all((pts >= np.asarray(self.lo) - tol) & (pts <= np.asarray(self.hi) + tol), axis=-1)

    def to_list(self) -> list:
        return [list(self.lo), list(self.hi)]


@dataclass(frozen=True)
class BodySpec:
    """Centrally symmetric convex body: a box or an l^q ball with per-axis radii.

    ``ballinf`` and ``box`` describe the same set; both are kept so that
    reports can name the family they were built from.
    """

    kind: str
    center: tuple
    half_widths: tuple

    def __post_init__(self):
        if self.kind not in BODY_KINDS:
            raise InvalidBodyError(f"unknown body kind {self.kind!r}; expected one of {BODY_KINDS}")
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        hw = np.atleast_1d(np.asarray(self.half_widths, dtype=float))
        if hw.size == 1 and len(center) > 1:
            hw = np.full(len(center), hw[0])
        if hw.size != len(center):
            raise InvalidBodyError("half_widths and center differ in dimension")
        if np.any(~np.isfinite(hw)) or np.any(hw <= 0):
            raise InvalidBodyError(f"half widths must be positive, got {tuple(hw)}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_widths", tuple(float(v) for v in hw))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def q(self) -> float:
        return {"box": math.inf, "ballinf": math.inf, "ball1": 1.0, "ball2": 2.0}[self.kind]

    def dilate(self, lam: float) -> "BodySpec":
        """Homothety about the body's own center."""
        if lam <= 0:
            raise InvalidBodyError("dilation factor must be positive")
        return BodySpec(self.kind, self.center, tuple(lam * w for w in self.half_widths))

    def shifted(self, center) -> "BodySpec":
        return BodySpec(self.kind, tuple(center), self.half_widths)

    def volume(self) -> float:
        """Lebesgue measure of the continuous body."""
        n = self.dim
        prod = float(np.prod(self.half_widths))
        if self.q == math.inf:
            return 2.0**n * prod
        if self.q == 1.0:
            return 2.0**n / math.factorial(n) * prod
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * prod

    def bounding_box(self) -> Box:
        c = np.asarray(self.center)
        w = np.asarray(self.half_widths)
        return Box(c - w, c + w)

    def norm(self, points) -> np.ndarray:
        """Gauge of ``points`` relative to the body (<= 1 means inside)."""
        u = np.abs(np.asarray(points, dtype=float) - np.asarray(self.center)) / np.asarray(self.half_widths)
        if self.q == math.inf:
            return u.max(axis=-1)
        if self.q == 1.0:
            return u.sum(axis=-1)
        return np.sqrt((u**2).sum(axis=-1))

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        return self.norm(points) <= 1.0 + tol

    def diameter(self) -> float:
        return self.bounding_box().diameter if self.q == math.inf else 2.0 * max(self.half_widths)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "half_widths": list(self.half_widths)}


def as_box(region) -> Box:
    if isinstance(region, Box):
        return region
    if isinstance(region, BodySpec):
        if region.q != math.inf:
            raise InvalidRegionError("only box-shaped bodies convert to boxes")
        return region.bounding_box()
    lo, hi = region
    return Box(lo, hi)


class SummedTable:
    """Cumulative masses at lattice corners of a :class:`GridFunction`.

    ``table[i_1, ..., i_n]`` is the integral of the density over
    ``[origin, origin + h * i]``.  Queries accept arbitrary real boxes,
    including ones that leave the grid.
    """

    def __init__(self, grid: GridFunction):
        self.grid = grid
        table = grid.values * grid.cell_volume
        for axis in range(grid.dim):
            table = np.cumsum(table, axis=axis)
        table = np.pad(table, [(1, 0)] * grid.dim)
        table.setflags(write=False)
        self.table = table
        # absolute roundoff allowance for box sums, from cancellation in the table
        self.sum_atol = 1e-12 * float(np.abs(grid.values).sum() * grid.cell_volume)
        self._corners = np.array(list(itertools.product((0, 1), repeat=grid.dim)), dtype=int)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def cumulative(self, points) -> np.ndarray:
        """Mass of ``(-inf, x]`` for each point ``x`` (shape ``(..., n)``)."""
        g = self.grid
        pts = np.asarray(points, dtype=float)
        shape = np.asarray(g.shape)
        u = np.clip((pts - g.lower) / g.h, 0.0, shape)
        base = np.minimum(np.floor(u).astype(np.intp), shape - 1)
        frac = u - base
        out = np.zeros(pts.shape[:-1])
        for corner in self._corners:
            weight = np.prod(np.where(corner == 1, frac, 1.0 - frac), axis=-1)
            idx = tuple((base + corner)[..., k] for k in range(g.dim))
            out += weight * self.table[idx]
        return out

    def box_sum(self, lo, hi) -> np.ndarray | float:
        """Integral of the density over boxes ``[lo, hi]``; empty boxes give 0.

        ``lo`` and ``hi`` have shape ``(n,)`` or ``(m, n)``.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        scalar = lo.ndim == 1
        lo2 = np.atleast_2d(lo)
        hi2 = np.maximum(np.atleast_2d(hi), lo2)
        total = np.zeros(lo2.shape[0])
        n = self.dim
        for corner in self._corners:
            pt = np.where(corner == 1, hi2, lo2)
            sign = (-1.0) ** (n - corner.sum())
            total += sign * self.cumulative(pt)
        total = np.where(np.any(hi2 <= lo2, axis=1), 0.0, np.maximum(total, 0.0))
        return float(total[0]) if scalar else total

    def box_average(self, lo, hi) -> np.ndarray | float:
        """Average of the density over boxes that may extend past the grid.

        Outside the grid the density is zero but the full box volume counts.
        Raises :class:`InvalidRegionError` when some ``lo_i >= hi_i``.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
            raise InvalidRegionError("box corners must be finite")
        if np.any(hi <= lo):
            raise InvalidRegionError("degenerate box: every side needs lo < hi")
        vol = np.prod(hi - lo, axis=-1)
        return self.box_sum(lo, hi) / vol


def build_table(g: GridFunction) -> SummedTable:
    return SummedTable(g)


def box_average(table: SummedTable, region) -> float:
    box = as_box(region)
    return float(table.box_average(box.lo, box.hi))


def _ball_weights(g: GridFunction, body: BodySpec, subsample: int):
    """Per-cell weights of a ball over the lattice cells meeting its bounding box.

    Returns ``(start, weights)`` where ``weights`` covers lattice cells
    ``start + index`` (which may lie outside the grid) and each weight is the
    fraction of the cell's ``subsample**n`` subcell centers inside the body.
    """
    bb = body.bounding_box()
    start = np.floor((np.asarray(bb.lo) - g.lower) / g.h).astype(int)
    stop = np.ceil((np.asarray(bb.hi) - g.lower) / g.h).astype(int)
    s = subsample
    offsets = (np.arange(s) + 0.5) / s
    axes = []
    for k in range(g.dim):
        cells = np.arange(start[k], stop[k])
        sub = g.origin[k] + g.h * (cells[:, None] + offsets[None, :]).ravel()
        axes.append(np.abs(sub - body.center[k]) / body.half_widths[k])
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    if body.q == 1.0:
        gauge = sum(mesh)
    elif body.q == 2.0:
        gauge = np.sqrt(sum(m**2 for m in mesh))
    else:
        gauge = np.maximum.reduce(np.broadcast_arrays(*mesh))
    inside = (gauge <= 1.0 + 1e-12).astype(float)
    new_shape = []
    for k in range(g.dim):
        new_shape += [stop[k] - start[k], s]
    inside = inside.reshape(new_shape)
    weights = inside.sum(axis=tuple(range(1, 2 * g.dim, 2))) / s**g.dim
    return start, weights


def ball_mass_and_volume(g: GridFunction, body: BodySpec, subsample: int = DEFAULT_SUBSAMPLE):
    """Sampled mass of ``g`` inside a ball and the sampled ball volume."""
    start, weights = _ball_weights(g, body, subsample)
    vol = float(weights.sum() * g.cell_volume)
    src, dst = [], []
    for k in range(g.dim):
        lo = max(start[k], 0)
        hi = min(start[k] + weights.shape[k], g.shape[k])
        if hi <= lo:
            return 0.0, vol
        src.append(slice(lo, hi))
        dst.append(slice(lo - start[k], hi - start[k]))
    mass = float((weights[tuple(dst)] * g.values[tuple(src)]).sum() * g.cell_volume)
    return mass, vol


def body_average(
    g: GridFunction,
    s: BodySpec,
    subsample: int = DEFAULT_SUBSAMPLE,
    table: SummedTable | None = None,
) -> float:
    """Average of ``g`` over a body.

    Boxes are integrated exactly.  For l^1 and l^2 balls every cell gets the
    fraction of its ``subsample**n`` subcell centers lying in the ball, and
    the average is the weighted mass divided by the equally weighted volume,
    so constants are reproduced exactly away from the grid boundary.
    """
    if s.dim != g.dim:
        raise DimensionError("body and grid dimensions differ")
    if subsample < 1:
        raise InvalidBodyError("subsample must be >= 1")
    if s.q == math.inf:
        table = table if table is not None else SummedTable(g)
        bb = s.bounding_box()
        return float(table.box_average(bb.lo, bb.hi))
    mass, vol = ball_mass_and_volume(g, s, subsample)
    return mass / vol


def body_mass(g: GridFunction, s: BodySpec, subsample: int = DEFAULT_SUBSAMPLE, table=None) -> float:
    return body_average(g, s, subsample, table) * body_measure(g, s, subsample)


def body_measure(g: GridFunction, s: BodySpec, subsample: int = DEFAULT_SUBSAMPLE) -> float:
    """Volume used as the denominator of :func:`body_average`."""
    if s.q == math.inf:
        return s.volume()
    _, weights = _ball_weights(g, s, subsample)
    return float(weights.sum() * g.cell_volume)


def lp_norm(g: GridFunction, p: float) -> float:
    """``(sum_cells value**p * h**n) ** (1/p)`` for ``p > 1``."""
    if not p > 1:
        raise InvalidExponentError(f"p must exceed 1, got {p}")
    top = float(np.max(np.abs(g.values))) if g.values.size else 0.0
    if top == 0.0 or not math.isfinite(top):
        return top
    # scale by the largest value so powers neither underflow nor overflow
    return float(top * (np.sum((np.abs(g.values) / top) ** p) * g.cell_volume) ** (1.0 / p))


def superlevel_measure(g: GridFunction, t: float) -> float:
    """Measure of ``{f > t}`` inside the grid bounding box."""
    return float(np.count_nonzero(g.values > t) * g.cell_volume)


def write_ggrid(g: GridFunction, path) -> None:
    """Write the text format: dims line, origin+h line, row-major values."""
    lines = [
        " ".join([str(g.dim)] + [str(n) for n in g.shape]),
        " ".join(repr(float(v)) for v in (*g.origin, g.h)),
    ]
    flat = g.values.ravel(order="C")
    width = g.shape[-1]
    for row in range(flat.size // width):
        lines.append(" ".join(repr(float(v)) for v in flat[row * width : (row + 1) * width]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_ggrid(path) -> GridFunction:
    try:
        tokens = Path(path).read_text().split("\n", 2)
    except OSError as exc:
        raise GridFormatError(f"cannot read grid file {path}: {exc}") from exc
    if len(tokens) < 3:
        raise GridFormatError("grid file needs a header line, an origin line and values")
    try:
        header = [int(t) for t in tokens[0].split()]
        n, shape = header[0], tuple(header[1:])
        geom = [float(t) for t in tokens[1].split()]
        values = np.array([float(t) for t in tokens[2].split()])
    except (ValueError, IndexError) as exc:
        raise GridFormatError(f"malformed grid file {path}: {exc}") from exc
    if len(shape) != n or len(geom) != n + 1:
        raise GridFormatError("header dimension does not match shape/origin entries")
    if values.size != int(np.prod(shape)):
        raise GridFormatError(f"expected {int(np.prod(shape))} values, found {values.size}")
    return GridFunction(values.reshape(shape), tuple(geom[:n]), geom[n])


def indicator_grid(lo: Sequence[float], hi: Sequence[float], origin: Sequence[float], h: float, shape) -> GridFunction:
    """Cell averages of the indicator of the box ``[lo, hi]``."""
    shape = tuple(np.atleast_1d(shape))
    factors = []
    for k, n in enumerate(shape):
        edges = origin[k] + h * np.arange(n + 1)
        overlap = np.clip(np.minimum(edges[1:], hi[k]) - np.maximum(edges[:-1], lo[k]), 0.0, None)
        factors.append(overlap / h)
    values = factors[0]
    for f in factors[1:]:
        values = np.multiply.outer(values, f)
    return GridFunction(values, tuple(origin), h)


def sample_grid(fn, origin: Sequence[float], h: float, shape) -> GridFunction:
    """Grid whose cell values are ``fn`` evaluated at cell centers."""
    shape = tuple(np.atleast_1d(shape))
    proto = GridFunction(np.zeros(shape), tuple(origin), h)
    return proto.with_values(fn(proto.cell_centers()))
