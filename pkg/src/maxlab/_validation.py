from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, InvalidExponentError, InvalidParameterError
from .grid import GridFunction


def check_grid(X, origin=None, h: float = 1.0) -> GridFunction:
    """Coerce an array (or pass through a GridFunction) into a grid."""
    if isinstance(X, GridFunction):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim not in (1, 2, 3):
        raise DimensionError(f"expected a 1D, 2D or 3D array of cell values, got ndim={arr.ndim}")
    origin = (0.0,) * arr.ndim if origin is None else origin
    return GridFunction(arr, origin, h)


def check_exponent(p: float) -> float:
    p = float(p)
    if not p > 1:
        raise InvalidExponentError(f"p must exceed 1, got {p}")
    return p


def check_lambda(lam: float, low: float, high: float, low_open: bool = False, high_open: bool = False) -> float:
    lam = float(lam)
    too_low = lam <= low if low_open else lam < low
    too_high = lam >= high if high_open else lam > high
    if too_low or too_high:
        left = "(" if low_open else "["
        right = ")" if high_open else "]"
        raise InvalidParameterError(f"lambda must lie in {left}{low}, {high}{right}, got {lam}")
    return lam


def check_is_fitted(est, attr: str) -> None:
    if not hasattr(est, attr):
        from sklearn.exceptions import NotFittedError

        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")
