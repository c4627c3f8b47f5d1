"""Numerical workbench for quasi-constant curvature metrics on charts."""

__version__ = "0.1.0"

from . import errors
from .expr import eval_jet3, parse_expr, to_source
from .jets import Jet3
from .metric import CompiledMetric, MetricSpec, compile_metric

__all__ = [
    "errors", "Jet3", "parse_expr", "to_source", "eval_jet3",
    "MetricSpec", "CompiledMetric", "compile_metric", "__version__",
]
