"""Lambda-dense filtrations of boxes built by hyperplane motion.

Each box is cut perpendicular to its longest side.  The cut starts at the
midpoint and slides toward the facet of the part with the smaller average
until the two averages agree, or until the part with the larger average has
shrunk to ``1 / lam_eff`` of the parent's volume.  Either way no child average
exceeds ``lam_eff`` times the parent average.

Along the cut axis the mass below the cut is piecewise linear in the cut
coordinate (linear inside each grid slab), so the equal-average point is
located exactly by scanning slab boundaries and solving one linear equation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, DegenerateInputError, InvalidParameterError
from .grid import Box, GridFunction, SummedTable, as_box

_REL = 1e-12


@dataclass
class FiltrationTree:
    """Flat array storage of a filtration; node 0 is the root.

    ``x``, ``y`` and ``z`` hold ``<f>_Q``, ``<f**p>_Q`` and the supremum of
    ``<f>_R`` over the ancestors ``R`` of ``Q`` (and over enclosing boxes
    inside the ambient box for the root).
    """

    lo: np.ndarray
    hi: np.ndarray
    parent: np.ndarray
    depth: np.ndarray
    children: list
    cut_axis: np.ndarray
    cut_coord: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p: float
    lam: float
    family: str = "box"
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.lo.shape[0])

    @property
    def dim(self) -> int:
        return int(self.lo.shape[1])

    @property
    def root(self) -> Box:
        return self.box(0)

    def box(self, i: int) -> Box:
        return Box(tuple(self.lo[i]), tuple(self.hi[i]))

    def volumes(self) -> np.ndarray:
        return np.prod(self.hi - self.lo, axis=1)

    def diameters(self) -> np.ndarray:
        return np.linalg.norm(self.hi - self.lo, axis=1)

    def leaves(self) -> list:
        return [i for i, kids in enumerate(self.children) if not kids]

    def levels(self) -> list:
        """Node lists of ``F_0, F_1, ...``; leaves persist into deeper levels."""
        out = [[0]]
        while True:
            nxt = []
            grew = False
            for i in out[-1]:
                if self.children[i]:
                    nxt.extend(self.children[i])
                    grew = True
                else:
                    nxt.append(i)
            if not grew:
                return out
            out.append(nxt)

    def node_dict(self, i: int) -> dict:
        return {
            "box": [self.lo[i].tolist(), self.hi[i].tolist()],
            "cut_axis": None if self.cut_axis[i] < 0 else int(self.cut_axis[i]),
            "cut_coord": None if math.isnan(self.cut_coord[i]) else float(self.cut_coord[i]),
            "x": float(self.x[i]),
            "y": float(self.y[i]),
            "z": float(self.z[i]),
        }

    def to_dict(self) -> dict:
        nodes = [self.node_dict(i) for i in range(self.n_nodes)]
        for i in reversed(range(self.n_nodes)):
            nodes[i]["children"] = [nodes[k] for k in self.children[i]]
        return {"p": self.p, "lambda": self.lam, "family": self.family, "tree": nodes[0]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "FiltrationTree":
        rows = []
        stack = [(data["tree"], -1, 0)]
        while stack:
            node, par, dep = stack.pop(0)
            idx = len(rows)
            rows.append((node, par, dep))
            for kid in node.get("children", []):
                stack.append((kid, idx, dep + 1))
        return _tree_from_rows(rows, data.get("p", 2.0), data.get("lambda", 2.0), data.get("family", "box"))


def _tree_from_rows(rows, p, lam, family) -> FiltrationTree:
    n = len(rows)
    lo = np.array([r[0]["box"][0] for r in rows], dtype=float)
    hi = np.array([r[0]["box"][1] for r in rows], dtype=float)
    parent = np.array([r[1] for r in rows], dtype=int)
    children = [[] for _ in range(n)]
    for i, par in enumerate(parent):
        if par >= 0:
            children[par].append(i)

    def stat(key):
        return np.array([r[0].get(key, 0.0) or 0.0 for r in rows], dtype=float)

    axes = np.array([-1 if r[0].get("cut_axis") is None else r[0]["cut_axis"] for r in rows], dtype=int)
    coords = np.array([np.nan if r[0].get("cut_coord") is None else r[0]["cut_coord"] for r in rows])
    return FiltrationTree(
        lo, hi, parent, np.array([r[2] for r in rows]), children, axes, coords,
        stat("x"), stat("y"), stat("z"), float(p), float(lam), family,
    )


def from_nested(g: GridFunction, nested: dict, lam: float, p: float = 2.0, family: str = "box") -> FiltrationTree:
    """Build a tree from ``{"box": [lo, hi], "children": [...]}`` and fill statistics from ``g``."""
    tree = FiltrationTree.from_dict({"tree": nested, "p": p, "lambda": lam, "family": family})
    _fill_stats(tree, g, None)
    return tree


# -- splitting ----------------------------------------------------------------


def _split_many(table: SummedTable, lo: np.ndarray, hi: np.ndarray, lam_eff: float):
    """Vectorized hyperplane-motion split of ``k`` boxes; returns ``(axis, cut, equalized)``."""
    g = table.grid
    k = lo.shape[0]
    rows = np.arange(k)
    sides = hi - lo
    axis = np.argmax(sides, axis=1)
    a = lo[rows, axis]
    b = hi[rows, axis]
    L = b - a
    mass = table.box_sum(lo, hi)

    def gap(c):
        # sign of <f>_{lower} - <f>_{upper} times positive factors: m(c) L - M (c - a)
        top = hi.copy()
        top[rows, axis] = c
        return table.box_sum(lo, top) * L - mass * (c - a)

    mid = a + 0.5 * L
    g_mid = gap(mid)
    scale = np.maximum(mass * L, 1e-300)
    equal_mid = np.abs(g_mid) <= _REL * scale
    down = g_mid < 0  # lower part has the smaller average: move toward lo
    target = np.where(down, b - L / lam_eff, a + L / lam_eff)

    # slab boundaries of the grid strictly between mid and target
    org = np.asarray(g.lower)[axis]
    u_mid = (mid - org) / g.h
    u_tgt = (target - org) / g.h
    first = np.where(down, np.ceil(u_mid) - 1, np.floor(u_mid) + 1)
    count = np.where(down, first - np.floor(u_tgt), np.ceil(u_tgt) - first)
    count = np.clip(count, 0, None).astype(int)
    width = int(count.max()) if k else 0
    step = np.where(down, -1.0, 1.0)
    j = np.arange(width)
    bnd = org[:, None] + (first[:, None] + step[:, None] * j[None, :]) * g.h
    valid = j[None, :] < count[:, None]
    pos = np.concatenate([mid[:, None], np.where(valid, bnd, target[:, None]), target[:, None]], axis=1)
    # enforce monotone motion and clamp to the target
    pos = np.where(down[:, None], np.maximum(pos, target[:, None]), np.minimum(pos, target[:, None]))

    P = pos.shape[1]
    vals = np.empty_like(pos)
    for c in range(P):
        vals[:, c] = gap(pos[:, c])
    sign0 = np.sign(g_mid)
    crossed = (vals * sign0[:, None] <= _REL * scale[:, None]) & (np.arange(P)[None, :] > 0)
    has = crossed.any(axis=1)
    idx = np.argmax(crossed, axis=1)
    prev = np.maximum(idx - 1, 0)
    p0 = pos[rows, prev]
    p1 = pos[rows, idx]
    v0 = vals[rows, prev]
    v1 = vals[rows, idx]
    denom = v0 - v1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(denom) > 0, v0 / denom, 1.0)
    root = p0 + (p1 - p0) * np.clip(t, 0.0, 1.0)
    cut = np.where(equal_mid, mid, np.where(has, root, target))
    equalized = equal_mid | has
    return axis, cut, equalized


def _children_boxes(lo, hi, axis, cut):
    rows = np.arange(lo.shape[0])
    hi_minus = hi.copy()
    hi_minus[rows, axis] = cut
    lo_plus = lo.copy()
    lo_plus[rows, axis] = cut
    return (lo, hi_minus), (lo_plus, hi)


def _check_split(table, lo, hi, axis, cut, lam_eff):
    (l1, h1), (l2, h2) = _children_boxes(lo, hi, axis, cut)
    vol = np.prod(hi - lo, axis=1)
    avg = table.box_sum(lo, hi) / vol
    v1 = np.prod(h1 - l1, axis=1)
    v2 = np.prod(h2 - l2, axis=1)
    a1 = table.box_sum(l1, h1) / v1
    a2 = table.box_sum(l2, h2) / v2
    bound = lam_eff * avg * (1 + 1e-9) + table.sum_atol * (lam_eff / vol + 1 / np.minimum(v1, v2))
    if np.any(np.maximum(a1, a2) > bound):
        raise AssertionError("split produced a child average above lam_eff times the parent's")
    if np.any(np.maximum(v1, v2) > vol / lam_eff * (1 + 1e-9)):
        raise AssertionError("split produced a child larger than |P| / lam_eff")


def split_box(g: GridFunction, P, lam_eff: float, table: SummedTable | None = None):
    """Split ``P`` into ``(P_minus, P_plus, cut_info)``.

    ``P_minus`` lies below the cut.  ``cut_info`` records the axis, the cut
    coordinate, its fractional position along the side and whether the two
    averages were equalized.
    """
    if not 1.0 < lam_eff <= 2.0:
        raise InvalidParameterError(f"lam_eff must lie in (1, 2], got {lam_eff}")
    P = as_box(P)
    if P.dim != g.dim:
        raise ConfigurationError("box and grid dimensions differ")
    if P.is_degenerate():
        raise DegenerateInputError("cannot split a box of zero volume")
    table = table or SummedTable(g)
    lo = np.asarray(P.lo, dtype=float)[None, :]
    hi = np.asarray(P.hi, dtype=float)[None, :]
    axis, cut, eq = _split_many(table, lo, hi, lam_eff)
    _check_split(table, lo, hi, axis, cut, lam_eff)
    (l1, h1), (l2, h2) = _children_boxes(lo, hi, axis, cut)
    ax = int(axis[0])
    info = {
        "axis": ax,
        "coord": float(cut[0]),
        "fraction": float((cut[0] - lo[0, ax]) / (hi[0, ax] - lo[0, ax])),
        "equalized": bool(eq[0]),
    }
    return Box(tuple(l1[0]), tuple(h1[0])), Box(tuple(l2[0]), tuple(h2[0])), info


# -- filtrations --------------------------------------------------------------


def enclosing_sup(g: GridFunction, S, ambient=None, table: SummedTable | None = None, limit: int = 4_000_000) -> float:
    """``sup <f>_R`` over boxes ``S <= R <= ambient``.

    The average is monotone in each face coordinate between grid lines, so
    faces on grid lines (plus the faces of ``S`` and ``ambient``) suffice.
    """
    S = as_box(S)
    table = table or SummedTable(g)
    x_s = float(table.box_average(S.lo, S.hi))
    if ambient is None:
        return x_s
    A = as_box(ambient)
    if np.any(np.asarray(A.lo) > np.asarray(S.lo) + 1e-12) or np.any(np.asarray(A.hi) < np.asarray(S.hi) - 1e-12):
        raise ConfigurationError("ambient box must contain S")
    lowers, uppers = [], []
    for k in range(g.dim):
        grid_lines = g.lower[k] + g.h * np.arange(g.shape[k] + 1)
        lo_c = grid_lines[(grid_lines > A.lo[k]) & (grid_lines < S.lo[k])]
        hi_c = grid_lines[(grid_lines > S.hi[k]) & (grid_lines < A.hi[k])]
        lowers.append(np.unique(np.concatenate([[A.lo[k], S.lo[k]], lo_c])))
        uppers.append(np.unique(np.concatenate([[S.hi[k], A.hi[k]], hi_c])))
    total = int(np.prod([len(a) * len(b) for a, b in zip(lowers, uppers)]))
    if total > limit:
        raise ConfigurationError(f"enclosing-box enumeration too large ({total} boxes)")
    best = x_s
    grids_lo = np.meshgrid(*lowers, indexing="ij")
    grids_lo = np.stack([m.ravel() for m in grids_lo], axis=1)
    grids_hi = np.meshgrid(*uppers, indexing="ij")
    grids_hi = np.stack([m.ravel() for m in grids_hi], axis=1)
    for start in range(0, grids_lo.shape[0], max(1, limit // max(grids_hi.shape[0], 1))):
        blk = grids_lo[start : start + max(1, limit // max(grids_hi.shape[0], 1))]
        lo = np.repeat(blk, grids_hi.shape[0], axis=0)
        hi = np.tile(grids_hi, (blk.shape[0], 1))
        best = max(best, float(np.max(table.box_average(lo, hi))))
    return best


def _fill_stats(tree: FiltrationTree, g: GridFunction, ambient, table=None, table_p=None) -> None:
    table = table or SummedTable(g)
    table_p = table_p or SummedTable(g.power(tree.p))
    vol = tree.volumes()
    tree.x = table.box_sum(tree.lo, tree.hi) / vol
    tree.y = table_p.box_sum(tree.lo, tree.hi) / vol
    tree.meta["sum_atol_x"] = table.sum_atol
    tree.meta["sum_atol_y"] = table_p.sum_atol
    z = tree.x.copy()
    z[0] = max(z[0], enclosing_sup(g, tree.root, ambient, table)) if ambient is not None else z[0]
    for i in range(tree.n_nodes):  # parents precede children
        par = tree.parent[i]
        if par >= 0:
            z[i] = max(z[par], tree.x[i])
    tree.z = z


def build_filtration(
    g: GridFunction,
    root,
    lam: float,
    max_depth: int | None = None,
    min_diam: float | None = None,
    p: float = 2.0,
    ambient=None,
) -> FiltrationTree:
    """Recursively split ``root`` until ``max_depth`` or ``min_diam`` stops it.

    A node is split while its depth is below ``max_depth`` and its diameter is
    at least ``min_diam`` (whichever criteria are given).  ``ambient`` widens
    the supremum defining ``z`` at the root.
    """
    if not lam > 1:
        raise InvalidParameterError(f"lambda must exceed 1, got {lam}")
    if not p > 1:
        raise InvalidParameterError(f"p must exceed 1, got {p}")
    if max_depth is None and min_diam is None:
        raise ConfigurationError("give max_depth, min_diam or both")
    if min_diam is not None and not min_diam > 0:
        raise ConfigurationError("min_diam must be positive")
    root = as_box(root)
    if root.dim != g.dim:
        raise ConfigurationError("root and grid dimensions differ")
    if root.is_degenerate():
        raise DegenerateInputError("root box has zero volume")
    lam_eff = min(lam, 2.0)
    table = SummedTable(g)

    los = [np.asarray(root.lo, dtype=float)[None, :]]
    his = [np.asarray(root.hi, dtype=float)[None, :]]
    parents = [np.array([-1])]
    depths = [np.array([0])]
    axes, coords = [], []
    frontier_lo, frontier_hi = los[0], his[0]
    frontier_ids = np.array([0])
    next_id = 1
    depth = 0
    while frontier_ids.size:
        split = np.ones(frontier_ids.size, dtype=bool)
        if max_depth is not None and depth >= max_depth:
            split[:] = False
        if min_diam is not None:
            split &= np.linalg.norm(frontier_hi - frontier_lo, axis=1) >= min_diam
        ax_level = np.full(frontier_ids.size, -1)
        cut_level = np.full(frontier_ids.size, np.nan)
        if split.any():
            lo, hi = frontier_lo[split], frontier_hi[split]
            axis, cut, _ = _split_many(table, lo, hi, lam_eff)
            _check_split(table, lo, hi, axis, cut, lam_eff)
            ax_level[split] = axis
            cut_level[split] = cut
            (l1, h1), (l2, h2) = _children_boxes(lo, hi, axis, cut)
            m = lo.shape[0]
            new_lo = np.empty((2 * m, g.dim))
            new_hi = np.empty((2 * m, g.dim))
            new_lo[0::2], new_lo[1::2] = l1, l2
            new_hi[0::2], new_hi[1::2] = h1, h2
            par = np.repeat(frontier_ids[split], 2)
            ids = np.arange(next_id, next_id + 2 * m)
            next_id += 2 * m
            los.append(new_lo)
            his.append(new_hi)
            parents.append(par)
            depths.append(np.full(2 * m, depth + 1))
            frontier_lo, frontier_hi, frontier_ids = new_lo, new_hi, ids
        else:
            frontier_ids = np.array([], dtype=int)
        axes.append(ax_level)
        coords.append(cut_level)
        depth += 1

    lo = np.concatenate(los)
    hi = np.concatenate(his)
    parent = np.concatenate(parents)
    n = lo.shape[0]
    children = [[] for _ in range(n)]
    for i in range(1, n):
        children[parent[i]].append(i)
    cut_axis = np.concatenate(axes)[:n] if n else np.array([], dtype=int)
    cut_coord = np.concatenate(coords)[:n]
    tree = FiltrationTree(
        lo, hi, parent, np.concatenate(depths), children,
        cut_axis.astype(int), cut_coord, np.zeros(n), np.zeros(n), np.zeros(n),
        float(p), float(lam), "box",
        {"lam_eff": lam_eff, "max_depth": max_depth, "min_diam": min_diam},
    )
    _fill_stats(tree, g, ambient, table)
    return tree


def dyadic_filtration(g: GridFunction, root, levels: int, p: float = 2.0, ambient=None) -> FiltrationTree:
    """Dyadic filtration of a cube: every node has ``2**n`` equal children.

    ``ambient`` widens the root's ``z`` to a sup over enclosing boxes.
    """
    root = as_box(root)
    if levels < 0:
        raise ConfigurationError("levels must be nonnegative")
    n = root.dim
    corners = np.array(list(np.ndindex(*(2,) * n)), dtype=float)
    lo_l = [np.asarray(root.lo, dtype=float)[None, :]]
    side = root.sides
    parents = [np.array([-1])]
    depths = [np.array([0])]
    start = 0
    for d in range(1, levels + 1):
        prev = lo_l[-1]
        half = side / 2**d
        new = (prev[:, None, :] + corners[None, :, :] * half).reshape(-1, n)
        lo_l.append(new)
        parents.append(np.repeat(np.arange(start, start + prev.shape[0]), 2**n))
        depths.append(np.full(new.shape[0], d))
        start += prev.shape[0]
    lo = np.concatenate(lo_l)
    depth = np.concatenate(depths)
    hi = lo + side[None, :] / (2.0 ** depth)[:, None]
    parent = np.concatenate(parents)
    m = lo.shape[0]
    children = [[] for _ in range(m)]
    for i in range(1, m):
        children[parent[i]].append(i)
    tree = FiltrationTree(
        lo, hi, parent, depth, children, np.full(m, -1), np.full(m, np.nan),
        np.zeros(m), np.zeros(m), np.zeros(m), float(p), float(2**n), "dyadic", {"levels": levels},
    )
    _fill_stats(tree, g, ambient)
    return tree


# -- verification -------------------------------------------------------------


def _entry(passed: bool, worst: float, detail: str = "") -> dict:
    return {"passed": bool(passed), "worst_margin": float(worst), "detail": detail}


def verify_density(tree: FiltrationTree, g: GridFunction, lam: float, tol: float = 1e-12) -> dict:
    """Check the lambda-dense filtration axioms on ``tree`` against ``g``.

    Properties, in order: a single root; members are nondegenerate boxes;
    every level covers the root; siblings overlap in measure zero; every
    level refines the previous one; diameters shrink; and every child
    average is at most ``lam`` times its parent's.  Margins are recomputed
    from ``g``; a negative worst margin is a failure.  An extra entry checks
    that no child exceeds ``1 / min(lam, 2)`` of its parent's volume.
    """
    table = SummedTable(g)
    vol = tree.volumes()
    root_vol = vol[0]
    report = {}

    roots = np.flatnonzero(tree.parent < 0)
    report["1_root"] = _entry(roots.tolist() == [0], 0.0 if roots.tolist() == [0] else -1.0)

    sides = tree.hi - tree.lo
    min_side = float(sides.min()) if sides.size else 0.0
    report["2_members"] = _entry(min_side > 0, min_side, "smallest side length")

    worst_cover = 0.0
    rlo, rhi = tree.lo[0], tree.hi[0]
    outside = np.max(np.maximum(rlo - tree.lo, tree.hi - rhi)) if tree.n_nodes else 0.0
    for level in tree.levels():
        worst_cover = max(worst_cover, abs(vol[level].sum() - root_vol) / root_vol)
    cover_margin = -max(worst_cover - 1e-12, outside - tol * np.max(rhi - rlo))
    report["3_cover"] = _entry(cover_margin >= 0, -max(worst_cover, outside), "relative volume defect")

    worst_overlap = 0.0
    for kids in tree.children:
        for a_i in range(len(kids)):
            for b_i in range(a_i + 1, len(kids)):
                a, b = kids[a_i], kids[b_i]
                ov = np.prod(np.clip(np.minimum(tree.hi[a], tree.hi[b]) - np.maximum(tree.lo[a], tree.lo[b]), 0, None))
                worst_overlap = max(worst_overlap, ov / min(vol[a], vol[b]))
    report["4_disjoint"] = _entry(worst_overlap <= 1e-12, -worst_overlap, "relative sibling overlap")

    worst_ref = 0.0
    for i, kids in enumerate(tree.children):
        if not kids:
            continue
        k = np.asarray(kids)
        span = np.max(tree.hi[i] - tree.lo[i])
        stick = max(np.max(tree.lo[i] - tree.lo[k]), np.max(tree.hi[k] - tree.hi[i]), 0.0) / span
        defect = abs(vol[k].sum() - vol[i]) / vol[i]
        worst_ref = max(worst_ref, stick, defect)
    report["5_refine"] = _entry(worst_ref <= 1e-12, -worst_ref, "containment and tiling defect")

    diam = tree.diameters()
    sups = [float(diam[level].max()) for level in tree.levels()]
    increases = max([b - a for a, b in zip(sups, sups[1:])], default=0.0)
    ok6 = increases <= 1e-12 * sups[0]
    md = tree.meta.get("min_diam")
    detail = f"level sup diameters {sups[0]:.6g} -> {sups[-1]:.6g}"
    margin6 = -increases
    if md is not None and tree.meta.get("max_depth") is None:
        ok6 = ok6 and sups[-1] < md
        margin6 = min(margin6, md - sups[-1])
    report["6_diameter"] = _entry(ok6, margin6, detail)

    avg = table.box_sum(tree.lo, tree.hi) / vol
    noise = table.sum_atol / vol
    worst7 = -np.inf
    worst_node = None
    for i in range(1, tree.n_nodes):
        par = tree.parent[i]
        excess = avg[i] - lam * avg[par] - noise[i] - lam * noise[par]
        if avg[par] <= noise[par]:
            m = 0.0 if excess <= 0 else np.inf
        else:
            m = excess / avg[par]
        if m > worst7:
            worst7, worst_node = m, i
    if tree.n_nodes == 1:
        worst7 = -np.inf
    report["7_lambda_average"] = _entry(
        worst7 <= tol,
        -worst7 if np.isfinite(worst7) else 0.0,
        "" if worst_node is None else f"worst child node {worst_node}",
    )

    lam_eff = min(lam, 2.0)
    worst_frac = 0.0
    for i in range(1, tree.n_nodes):
        worst_frac = max(worst_frac, vol[i] / vol[tree.parent[i]])
    frac_ok = tree.n_nodes == 1 or worst_frac <= 1 / lam_eff + 1e-12
    report["volume_fraction"] = _entry(frac_ok, 1 / lam_eff - worst_frac if tree.n_nodes > 1 else 0.0, "max child volume fraction")
    report["all_passed"] = all(v["passed"] for k, v in report.items() if k[0].isdigit())
    return report


def tree_to_svg(tree: FiltrationTree, size: int = 512, leaves_only: bool = True) -> str:
    """SVG drawing of a 2D partition, one rectangle per node."""
    if tree.dim != 2:
        raise ConfigurationError("SVG output is available for 2D trees only")
    lo0, hi0 = tree.lo[0], tree.hi[0]
    span = hi0 - lo0
    scale = size / span.max()
    nodes = tree.leaves() if leaves_only else range(tree.n_nodes)
    xmax = max(float(tree.x.max()), 1e-300)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{span[0] * scale:.0f}" height="{span[1] * scale:.0f}">'
    ]
    for i in nodes:
        x0 = (tree.lo[i, 0] - lo0[0]) * scale
        y0 = (hi0[1] - tree.hi[i, 1]) * scale
        w = (tree.hi[i, 0] - tree.lo[i, 0]) * scale
        h = (tree.hi[i, 1] - tree.lo[i, 1]) * scale
        shade = int(255 * (1 - tree.x[i] / xmax))
        parts.append(
            f'<rect x="{x0:.3f}" y="{y0:.3f}" width="{w:.3f}" height="{h:.3f}" '
            f'fill="rgb({shade},{shade},255)" stroke="black" stroke-width="0.5"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


__all__ = [
    "FiltrationTree",
    "split_box",
    "build_filtration",
    "dyadic_filtration",
    "enclosing_sup",
    "verify_density",
    "from_nested",
    "tree_to_svg",
]
