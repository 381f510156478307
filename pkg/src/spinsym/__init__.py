"""Geometry of first-order 2x2 matrix operators: frames, metrics, charges,
gauge covariance, electromagnetic potentials and spin structures."""

from .errors import (
    AmbiguousStepError,
    EvalDomainError,
    GridError,
    NumericalFault,
    ParseError,
    SpinsymError,
    StencilError,
    ValidationError,
)
from .fields import Chart, default_chart
from .symbols import Frame, MetricField, OperatorData, PrincipalSymbol

__all__ = [
    "AmbiguousStepError",
    "Chart",
    "EvalDomainError",
    "Frame",
    "GridError",
    "MetricField",
    "NumericalFault",
    "OperatorData",
    "ParseError",
    "PrincipalSymbol",
    "SpinsymError",
    "StencilError",
    "ValidationError",
    "default_chart",
]

__version__ = "0.1.0"
