"""Quantized Ding functionals on CP^1 with -K = O(2).

Metrics on the anticanonical bundle, their Bergman quantizations, the Ding
functional and its quantized counterpart, their Hessians, large-k expansions
and balanced metrics.
"""

from .errors import DegenerateMetricError, IndefiniteFormError
from .geometry import ROUND, MetricPotential, make_grid
from .kernels import BACKEND
from .polynomial import Polynomial, parse_expr
from .quantization import HermitianForm, fs, hilb

__all__ = [
    "BACKEND",
    "DegenerateMetricError",
    "HermitianForm",
    "IndefiniteFormError",
    "MetricPotential",
    "Polynomial",
    "ROUND",
    "fs",
    "hilb",
    "make_grid",
    "parse_expr",
]
__version__ = "0.1.0"
