"""Numerical laboratory for lower bounds of maximal function operators."""

from .bellman import (
    BellmanPoint,
    bellman_eval,
    chord_margin,
    lemma_certificate,
    main_inequality_margin,
    theorem_constants,
)
from .covering import besicovitch_extract, build_psi, dichotomy_check, layer_cake_report, level_family, stein_check
from .exceptions import MaxlabError
from .grid import BodySpec, Box, GridFunction, SummedTable, body_average, read_ggrid, write_ggrid
from .operators import (
    MaximalField,
    OperatorSpec,
    centered_counterexample_report,
    dyadic_maximal,
    lambda_maximal,
    one_sided_maximal,
)
from .partition import FiltrationTree, build_filtration, split_box, verify_density
from .search import Operator, almost_centered_bound, grafakos_check, minimize_ratio, ratio

__version__ = "0.1.0"

__all__ = [
    "BellmanPoint",
    "BodySpec",
    "Box",
    "FiltrationTree",
    "GridFunction",
    "MaxlabError",
    "MaximalField",
    "Operator",
    "OperatorSpec",
    "SummedTable",
    "almost_centered_bound",
    "bellman_eval",
    "besicovitch_extract",
    "body_average",
    "build_filtration",
    "build_psi",
    "centered_counterexample_report",
    "chord_margin",
    "dichotomy_check",
    "dyadic_maximal",
    "grafakos_check",
    "lambda_maximal",
    "layer_cake_report",
    "lemma_certificate",
    "level_family",
    "main_inequality_margin",
    "minimize_ratio",
    "one_sided_maximal",
    "ratio",
    "read_ggrid",
    "split_box",
    "stein_check",
    "theorem_constants",
    "verify_density",
    "write_ggrid",
]
