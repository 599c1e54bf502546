"""Bellman function certificate for lower bounds of filtration maximal operators.

For ``0 <= x <= z``, ``p > 1`` and ``lam > 1``::

    B(x, y, z; lam) = z**p + c(p, lam) * (y - x * z**(p - 1))_+,
    c(p, lam) = (lam**p - 1) / (lam**p - lam).

Along a lam-dense filtration, ``B`` evaluated at the node statistics
``(<f>_Q, <f**p>_Q, sup_{R >= Q} <f>_R)`` is dominated by the volume-weighted
sum over the children, which telescopes into a lower bound for
``<(M f)**p>_S``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, ConsistencyError, DomainError, InvalidParameterError
from .grid import Box, GridFunction, SummedTable


def bellman_coefficient(p: float, lam: float) -> float:
    """``(lam**p - 1) / (lam**p - lam)``; the pole at ``lam = 1`` is rejected."""
    if not lam > 1:
        raise InvalidParameterError(f"lambda must exceed 1, got {lam}")
    if not p > 1:
        raise InvalidParameterError(f"p must exceed 1, got {p}")
    lp = lam**p
    return (lp - 1.0) / (lp - lam)


@dataclass(frozen=True)
class BellmanPoint:
    x: float
    y: float
    z: float
    p: float
    lam: float

    def __post_init__(self):
        if not (self.p > 1 and self.lam > 1):
            raise InvalidParameterError("Bellman points need p > 1 and lambda > 1")
        if min(self.x, self.y, self.z) < 0:
            raise DomainError("Bellman variables must be nonnegative")
        if self.x > self.z * (1 + 1e-12) + 1e-300:
            raise DomainError(f"Bellman domain requires x <= z, got x={self.x}, z={self.z}")


def bellman_eval(pt: BellmanPoint) -> float:
    c = bellman_coefficient(pt.p, pt.lam)
    return pt.z**pt.p + c * max(pt.y - pt.x * pt.z ** (pt.p - 1), 0.0)


def chord_margin(s: float, p: float, lam: float) -> float:
    """``(s**p - 1) - c(p, lam) (s**p - s)``, nonnegative for ``1 <= s <= lam``."""
    if not (1.0 <= s <= lam):
        raise DomainError(f"s must lie in [1, {lam}], got {s}")
    bellman_coefficient(p, lam)
    sp = s**p
    lp = lam**p
    # over a common denominator both endpoints cancel exactly
    return ((sp - 1.0) * (lp - lam) - (lp - 1.0) * (sp - s)) / (lp - lam)


def main_inequality_margin(
    parent: BellmanPoint,
    children: Sequence[tuple],
    check_density: bool = True,
    rtol: float = 1e-9,
    atol_x: float = 0.0,
    atol_y: float = 0.0,
) -> float:
    """``sum_P w_P B(P) - B(Q)`` for one refinement step.

    ``children`` holds ``(w_P, BellmanPoint)`` pairs with ``w_P = |P| / |Q|``.
    Aggregation mismatches raise :class:`ConsistencyError`; a negative return
    value is a genuine violation.  ``check_density=False`` admits children
    with ``x_P > lam * x_Q``, which the inequality does not cover.
    ``atol_x`` and ``atol_y`` absorb roundoff in statistics read from a
    summed table.
    """
    if not children:
        raise ConsistencyError("a refinement needs at least one child")
    w = np.array([c[0] for c in children], dtype=float)
    pts = [c[1] for c in children]
    if np.any(w <= 0):
        raise ConsistencyError("child weights must be positive")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ConsistencyError(f"child weights sum to {w.sum()!r}, not 1")
    for pt in pts:
        if pt.p != parent.p or pt.lam != parent.lam:
            raise ConsistencyError("children and parent use different (p, lambda)")
    xs = np.array([pt.x for pt in pts])
    ys = np.array([pt.y for pt in pts])
    zs = np.array([pt.z for pt in pts])
    scale_x = max(parent.x, 1e-300)
    scale_y = max(parent.y, 1e-300)
    if abs(float(w @ xs) - parent.x) > rtol * scale_x + atol_x:
        raise ConsistencyError("children do not average to the parent's x")
    if abs(float(w @ ys) - parent.y) > rtol * scale_y + atol_y:
        raise ConsistencyError("children do not average to the parent's y")
    floor = np.maximum(xs, parent.z)
    if np.any(zs < floor * (1 - 1e-12) - atol_x):
        raise ConsistencyError("child z must dominate max(x_P, z_Q)")
    if check_density and np.any(xs > parent.lam * (parent.x * (1 + rtol) + atol_x) + atol_x + 1e-300):
        raise ConsistencyError("a child average exceeds lambda times the parent average")
    total = sum(wi * bellman_eval(pt) for wi, pt in zip(w, pts))
    return float(total - bellman_eval(parent))


def theorem_constants(p: float, lam: float, n: int) -> dict:
    """Closed-form lower-bound constants for ``||M f||_p / ||f||_p``.

    ``general`` is the lam-dense constant, ``limit`` its value as
    ``lam -> 1+`` (parallelepipeds), ``dyadic`` the dyadic-cube constant.
    """
    if not p > 1:
        raise InvalidParameterError(f"p must exceed 1, got {p}")
    if n < 1:
        raise InvalidParameterError("dimension must be >= 1")
    general = bellman_coefficient(p, lam) ** (1.0 / p)
    limit = (p / (p - 1.0)) ** (1.0 / p)
    d = 2.0 ** (n * p)
    dyadic = ((d - 1.0) / (d - 2.0**n)) ** (1.0 / p)
    return {"general": general, "limit": limit, "dyadic": dyadic}


def node_points(tree, p: float | None = None, lam: float | None = None) -> list:
    p = tree.p if p is None else p
    lam = tree.lam if lam is None else lam
    return [BellmanPoint(float(a), float(b), float(c), p, lam) for a, b, c in zip(tree.x, tree.y, tree.z)]


def tree_margins(tree, lam: float | None = None) -> list:
    """Main-inequality margin at every internal node of a filtration tree."""
    lam = tree.lam if lam is None else lam
    pts = node_points(tree, lam=lam)
    vols = tree.volumes()
    ax = tree.meta.get("sum_atol_x", 0.0)
    ay = tree.meta.get("sum_atol_y", 0.0)
    out = []
    for i, kids in enumerate(tree.children):
        if not kids:
            continue
        children = [(vols[k] / vols[i], pts[k]) for k in kids]
        small = min(vols[k] for k in kids)
        out.append((i, main_inequality_margin(pts[i], children, atol_x=2 * ax / small, atol_y=2 * ay / small)))
    return out


def level_bellman_sums(tree, lam: float | None = None) -> list:
    """Volume-weighted Bellman sums over the levels ``F_0, F_1, ...``."""
    lam = tree.lam if lam is None else lam
    pts = node_points(tree, lam=lam)
    vols = tree.volumes()
    root_vol = vols[0]
    return [sum(vols[i] / root_vol * bellman_eval(pts[i]) for i in level) for level in tree.levels()]


def lemma_certificate(
    g: GridFunction,
    S: Box,
    tree,
    p: float,
    lam: float,
    mq,
    node_id: int = 0,
    tol: float = 1e-6,
) -> dict:
    """Check ``<(M_Q f)**p>_S >= B(x_S, y_S, z_S; lam)``.

    ``tree`` is a filtration rooted at ``S`` and ``mq`` a maximal field over
    the same family; ``z_S`` is the tree's supremum over enclosing members.
    """
    if mq.family != tree.family:
        raise ConfigurationError(f"maximal field family {mq.family!r} does not match tree family {tree.family!r}")
    root = tree.box(node_id)
    if not (np.allclose(root.lo, S.lo, rtol=0, atol=1e-12) and np.allclose(root.hi, S.hi, rtol=0, atol=1e-12)):
        raise ConfigurationError("tree node is not the certified box S")
    table = SummedTable(g)
    x = float(table.box_average(S.lo, S.hi))
    y = float(SummedTable(g.power(p)).box_average(S.lo, S.hi))
    z = max(float(tree.z[node_id]), x)
    lhs = float(SummedTable(mq.field.power(p)).box_average(S.lo, S.hi))
    rhs = bellman_eval(BellmanPoint(x, y, z, p, lam))
    margin = lhs - rhs
    return {
        "node_id": int(node_id),
        "x": x,
        "y": y,
        "z": z,
        "lhs": lhs,
        "rhs": rhs,
        "margin": margin,
        "passed": bool(margin >= -tol),
    }


def certify_tree(g: GridFunction, tree, p: float, lam: float, mq, tol: float = 1e-6) -> list:
    """Certificates for every node of ``tree`` (each node roots its subtree)."""
    return [lemma_certificate(g, tree.box(i), tree, p, lam, mq, node_id=i, tol=tol) for i in range(tree.n_nodes)]


def coefficient_limit_gap(p: float, k: int) -> float:
    """``c(p, 1 + 10**-k) - p / (p - 1)``, which tends to 0 as ``k`` grows."""
    return bellman_coefficient(p, 1.0 + 10.0**-k) - p / (p - 1.0)


def bellman_derivative_z(pt: BellmanPoint, step: float = 1e-7) -> float:
    """Forward finite difference of ``B`` in ``z``."""
    up = BellmanPoint(pt.x, pt.y, pt.z + step, pt.p, pt.lam)
    return (bellman_eval(up) - bellman_eval(pt)) / step


__all__ = [
    "BellmanPoint",
    "bellman_coefficient",
    "bellman_eval",
    "chord_margin",
    "main_inequality_margin",
    "theorem_constants",
    "lemma_certificate",
    "certify_tree",
    "tree_margins",
    "level_bellman_sums",
    "coefficient_limit_gap",
    "node_points",
]
