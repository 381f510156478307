"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SpinsymError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SpinsymError):
    """Malformed expression or problem file.

    ``pos`` is a 1-based character offset into the offending source, or
    ``None`` when no position applies.
    """

    def __init__(self, message: str, pos: int | None = None, source: str | None = None):
        self.pos = pos
        self.source = source
        if pos is not None:
            message = f"{message} (at offset {pos})"
        super().__init__(message)


class EvalDomainError(SpinsymError):
    """An expression left its mathematical domain (log of a non-positive
    number, division by zero, non-integer power, ...)."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (node at offset {pos})"
        super().__init__(message)


class StencilError(SpinsymError):
    """A finite-difference stencil would cross a non-periodic boundary."""


class GridError(SpinsymError):
    """A pointwise check failed at a grid node.

    Carries the multi-index of the node and its coordinates so callers can
    report a witness.
    """

    def __init__(self, message: str, index=None, point=None):
        self.index = None if index is None else tuple(int(i) for i in index)
        self.point = None if point is None else tuple(float(v) for v in point)
        if self.index is not None:
            message = f"{message} at node {self.index} (x = {_fmt_point(self.point)})"
        super().__init__(message)


class ValidationError(GridError):
    """Input violates a structural requirement (Hermiticity, signature,
    group membership, orthonormality, constancy of a charge ...)."""


class NumericalFault(GridError):
    """Two computations of the same quantity that must agree do not."""


class AmbiguousStepError(SpinsymError):
    """Consecutive samples of a loop are too far apart to pick a sheet of
    the double cover unambiguously."""


def _fmt_point(point):
    if point is None:
        return "?"
    return "(" + ", ".join(f"{v:.6g}" for v in point) + ")"
