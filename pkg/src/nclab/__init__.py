"""Numerical laboratory for the Moyal plane: truncated operators, symbols,
Littlewood-Paley analysis, paraproducts, double operator integrals and
semilinear evolution equations."""

from ._accel import DEFAULT_BACKEND, resolve_backend
from .core import NcOperator, ThetaData, lambda_op, lp_norm, trace
from .symbol import Grid, Symbol, dequantize, quantize, twisted_convolution

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BACKEND",
    "Grid",
    "NcOperator",
    "Symbol",
    "ThetaData",
    "dequantize",
    "lambda_op",
    "lp_norm",
    "quantize",
    "resolve_backend",
    "trace",
    "twisted_convolution",
]
