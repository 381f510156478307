"""Gauge maps ``R: M -> SL(2,C)`` (or ``SU(2)`` in dimension 3) and their
action ``L -> R* L R`` on operators and symbols."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import ValidationError
from .fields import Chart, Field
from .csub import covariant_subprincipal, potential_on_grid
from .symbols import (
    OperatorData,
    PrincipalSymbol,
    charges,
    check_self_adjoint,
    dagger,
    det2,
    metric_from_symbol,
)

GAUGE_TOL = 1e-10


class Group(enum.Enum):
    SL2C = "SL2C"
    SU2 = "SU2"

    @classmethod
    def parse(cls, name: str) -> "Group":
        key = name.strip().upper().replace("(", "").replace(")", "").replace(",", "")
        aliases = {"SL2C": cls.SL2C, "SU2": cls.SU2}
        if key not in aliases:
            raise ValueError(f"unknown gauge group {name!r} (expected SL2C or SU2)")
        return aliases[key]


class GaugeValidationError(ValidationError):
    def __init__(self, message, index=None, point=None, det=None, unitarity_defect=None):
        self.det = det
        self.unitarity_defect = unitarity_defect
        detail = []
        if det is not None:
            detail.append(f"det R = {complex(det):.6g}")
        if unitarity_defect is not None:
            detail.append(f"|R*R - I| = {unitarity_defect:.3g}")
        if detail:
            message = f"{message} [{', '.join(detail)}]"
        super().__init__(message, index=index, point=point)


@dataclass(frozen=True)
class GaugeMap:
    """A validated determinant-one matrix field."""

    R: Field
    group: Group
    chart: Chart

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        out = np.asarray(self.R(np.atleast_2d(pts)), dtype=complex)
        return out[0] if pts.ndim == 1 else out


def unitarity_defect(R: np.ndarray) -> np.ndarray:
    return np.abs(dagger(R) @ R - np.eye(2)).max(axis=(-1, -2))


def validate_gauge(R: Field, group: Group | str, chart: Chart, tol: float = GAUGE_TOL,
                   nodes=None) -> GaugeMap:
    """Check ``det R = 1`` (and ``R* R = I`` for SU2) at every node.

    Raises:
        GaugeValidationError: with the failing node, its determinant and
            unitarity defect.  Nothing is projected back onto the group.
    """
    if isinstance(group, str):
        group = Group.parse(group)
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    vals = fields.evaluate_on_grid(lambda x: np.asarray(R(x), dtype=complex), chart, nodes)
    dets = det2(vals)
    udef = unitarity_defect(vals)

    def fail(mask, message):
        k = fields.first_failure(mask)
        if k is not None:
            index = chart.index_of(k) if on_grid else (k,)
            raise GaugeValidationError(message, index, nodes[k], dets[k], float(udef[k]))

    fail(np.abs(dets - 1) <= tol, "gauge map does not have determinant one")
    if group is Group.SU2:
        fail(udef <= tol, "gauge map is not unitary")
    return GaugeMap(R, group, chart)


def compose(first: GaugeMap, second: GaugeMap) -> GaugeMap:
    """Pointwise product ``R1 R2``: transforming by ``R1`` and then by ``R2``
    equals transforming by the product."""
    group = Group.SU2 if first.group is Group.SU2 and second.group is Group.SU2 else Group.SL2C
    return GaugeMap(lambda x: first(x) @ second(x), group, first.chart)


def conjugate(R: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``R* M R`` broadcasting ``R`` (``(N,2,2)``) over extra axes of ``M``."""
    extra = M.ndim - R.ndim
    Rb = R.reshape(R.shape[:1] + (1,) * extra + R.shape[1:])
    return dagger(Rb) @ M @ Rb


def transform_symbols(sym: PrincipalSymbol, sub: Field | None, R: GaugeMap):
    """Conjugate the principal symbol and a zeroth-order symbol (the
    subprincipal or covariant subprincipal field) by ``R``."""
    if sym.chart.dim != R.chart.dim:
        raise ValueError("symbol and gauge map live on charts of different dimension")

    def coeffs(points):
        return conjugate(R(points), sym.coefficients(points))

    new_sym = PrincipalSymbol(coeffs, sym.chart)
    if sub is None:
        return new_sym, None

    def new_sub(points):
        return conjugate(R(points), np.asarray(sub(points)))

    return new_sym, new_sub


def transform_operator(op: OperatorData, R: GaugeMap, h: float | None = None) -> OperatorData:
    """Coefficients of ``R* L R``.

    ``F~^a = R* F^a R`` and ``G~ = R* G R + R* F^a d_a R`` (product rule,
    ``d_a R`` by central differences).
    """
    chart = op.chart

    def F(points):
        return conjugate(R(points), np.asarray(op.F(points)))

    def G(points):
        Rx = R(points)
        Rd = dagger(Rx)
        out = Rd @ np.asarray(op.G(points)) @ Rx
        Fx = np.asarray(op.F(points))
        for a in range(chart.dim):
            dR = fields.fd_partial(R, points, a, chart, h)
            out = out + Rd @ Fx[:, a] @ dR
        return out

    return OperatorData(F, G, chart)


@dataclass(frozen=True)
class InvarianceReport:
    """Grid-wide maxima of ``|after - before|`` under one gauge map."""

    metric: float
    charges_before: tuple[int, ...]
    charges_after: tuple[int, ...]
    potential: float
    csub_covariance: float
    hermiticity_after: float

    @property
    def charge_deltas(self) -> tuple[int, ...]:
        return tuple(abs(a - b) for a, b in zip(self.charges_after, self.charges_before))


def invariance_report(op: OperatorData, R: GaugeMap, q: Field | None = None,
                      h: float | None = None) -> InvarianceReport:
    """Compare ``L`` and ``R* L R``: metric, charges, potential and the
    two-path covariance ``csub(R* L R)`` vs ``R* csub(L) R``, all node-wise
    over the chart."""
    chart = op.chart
    nodes = chart.nodes()
    op2 = transform_operator(op, R, h)
    sym1, sym2 = op.principal_symbol, op2.principal_symbol
    g1 = metric_from_symbol(sym1, check=True)
    g2 = metric_from_symbol(sym2, check=True)
    gu1 = fields.evaluate_on_grid(g1.upper, chart, nodes)
    gu2 = fields.evaluate_on_grid(g2.upper, chart, nodes)
    ch1, ch2 = charges(sym1, q, g1), charges(sym2, q, g2)

    C1 = fields.evaluate_on_grid(covariant_subprincipal(op, g1, h), chart, nodes)
    C2 = fields.evaluate_on_grid(covariant_subprincipal(op2, g2, h), chart, nodes)
    A1, _ = potential_on_grid(C1, fields.evaluate_on_grid(op.frame, chart, nodes), chart)
    A2, _ = potential_on_grid(C2, fields.evaluate_on_grid(op2.frame, chart, nodes), chart)
    Rv = fields.evaluate_on_grid(R, chart, nodes)
    cov = np.abs(C2 - dagger(Rv) @ C1 @ Rv).max()
    herm = check_self_adjoint(op2, h=h, raise_on_failure=False).worst
    return InvarianceReport(float(np.abs(gu2 - gu1).max()), ch1.as_tuple(), ch2.as_tuple(),
                            float(np.abs(A2 - A1).max()), float(cov), float(herm))
