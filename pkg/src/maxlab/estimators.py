"""scikit-learn style wrappers.

The laboratory's objects are functions on grids rather than sample-by-feature
tables, so ``X`` here is one array of cell values (or a GridFunction).  The
wrappers exist for parameter handling (``get_params``/``set_params``,
``clone``) and pipeline composition; the numerical work lives in the
functional modules.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import partition, search
from ._validation import check_exponent, check_grid, check_is_fitted, check_lambda


class MaximalTransformer(TransformerMixin, BaseEstimator):
    """Map cell values ``f`` to ``M f`` for a named operator."""

    def __init__(self, op: str = "uncentered-box", lam: float = 1.0, levels=None, h: float = 1.0):
        self.op = op
        self.lam = lam
        self.levels = levels
        self.h = h

    def _operator(self):
        return search.Operator(self.op, lam=self.lam, levels=self.levels)

    def fit(self, X, y=None):
        g = check_grid(X, h=self.h)
        self._operator()
        self.dim_ = g.dim
        self.shape_ = g.shape
        return self

    def transform(self, X):
        check_is_fitted(self, "dim_")
        g = check_grid(X, h=self.h)
        return np.array(search.apply_operator(g, self._operator()).values)

    def ratio(self, X, p: float = 2.0) -> float:
        g = check_grid(X, h=self.h)
        return search.ratio(g, self._operator(), check_exponent(p)).ratio


class FiltrationPartitioner(BaseEstimator):
    """Fit a lambda-dense filtration of the grid box; ``predict`` returns leaf ids."""

    def __init__(self, lam: float = 1.5, max_depth=None, min_diam=None, p: float = 2.0, h: float = 1.0):
        self.lam = lam
        self.max_depth = max_depth
        self.min_diam = min_diam
        self.p = p
        self.h = h

    def fit(self, X, y=None):
        g = check_grid(X, h=self.h)
        lam = check_lambda(self.lam, 1.0, np.inf, low_open=True, high_open=True)
        self.tree_ = partition.build_filtration(g, g.bounding_box, lam, self.max_depth, self.min_diam, check_exponent(self.p))
        self.report_ = partition.verify_density(self.tree_, g, lam)
        leaves = np.asarray(self.tree_.leaves())
        self.leaf_lo_ = self.tree_.lo[leaves]
        self.leaf_hi_ = self.tree_.hi[leaves]
        self.leaf_ids_ = leaves
        return self

    def predict(self, points):
        """Leaf node containing each point (``-1`` outside the root)."""
        check_is_fitted(self, "tree_")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.all((pts[:, None, :] >= self.leaf_lo_[None]) & (pts[:, None, :] < self.leaf_hi_[None]), axis=2)
        hit = inside.any(axis=1)
        # points on the root's upper faces belong to the last leaf touching them
        upper = np.all((pts[:, None, :] >= self.leaf_lo_[None]) & (pts[:, None, :] <= self.leaf_hi_[None]), axis=2)
        choice = np.where(hit, np.argmax(inside, axis=1), np.argmax(upper, axis=1))
        found = hit | upper.any(axis=1)
        return np.where(found, self.leaf_ids_[choice], -1)


class RatioSearch(BaseEstimator):
    """Annealing search for small ``||M f||_p / ||f||_p``; one chain per seed."""

    def __init__(self, op: str = "uncentered-box", p: float = 2.0, n_cells: int = 256, budget: int = 10_000, seeds=(0,)):
        self.op = op
        self.p = p
        self.n_cells = n_cells
        self.budget = budget
        self.seeds = seeds

    def fit(self, X=None, y=None):
        p = check_exponent(self.p)
        self.results_ = search.search_seeds(self.op, p, (self.n_cells,), self.budget, list(self.seeds))
        best = min(self.results_, key=lambda r: (r.report.ratio, r.seed))
        self.best_ratio_ = best.report.ratio
        self.best_ = best.best
        return self

    def score(self, X=None, y=None) -> float:
        """Negative best ratio, so that larger is better."""
        check_is_fitted(self, "best_ratio_")
        return -self.best_ratio_


__all__ = ["MaximalTransformer", "FiltrationPartitioner", "RatioSearch"]
