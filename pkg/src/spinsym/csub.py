"""Covariant subprincipal symbol and the electromagnetic covector potential.

Symbols handled here are at most linear in momentum,
``S(x, p) = S0(x) + S_a(x) p_a``, so momentum derivatives are read off
the coefficients exactly; only coordinate derivatives use finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields
from .fields import Chart, Field
from .symbols import (
    PAULI,
    MetricField,
    OperatorData,
    PrincipalSymbol,
    adjugate,
    frame_to_symbol,
    hermitian_defect,
    metric_from_symbol,
    subprincipal_symbol,
)

__all__ = [
    "adjugate",
    "LinearSymbol",
    "PolySymbol",
    "bracket3",
    "correction_term",
    "CovariantSub",
    "covariant_subprincipal",
    "Potential",
    "extract_potential",
    "potential_on_grid",
    "build_operator",
]

CSUB_HERMITIAN_TOL = 1e-8
POTENTIAL_IMAG_TOL = 1e-8
SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class LinearSymbol:
    """``S(x, p) = const(x) + coeffs(x)_a p_a``; either part may be ``None``
    (meaning zero)."""

    chart: Chart
    const: Field | None = None
    coeffs: Field | None = None

    @classmethod
    def of(cls, sym: PrincipalSymbol) -> "LinearSymbol":
        return cls(sym.chart, coeffs=sym.coefficients)

    def parts(self, points):
        n, dim = len(points), self.chart.dim
        c0 = (np.zeros((n, 2, 2), complex) if self.const is None
              else np.asarray(self.const(points), dtype=complex))
        c1 = (np.zeros((n, dim, 2, 2), complex) if self.coeffs is None
              else np.asarray(self.coeffs(points), dtype=complex))
        return c0, c1

    def x_derivatives(self, points, h=None):
        """``(d_g const, d_g coeffs_a)`` with shapes ``(N, g, 2, 2)`` and
        ``(N, g, a, 2, 2)``."""
        n, dim = len(points), self.chart.dim
        if self.const is None:
            d0 = np.zeros((n, dim, 2, 2), complex)
        else:
            d0 = fields.fd_gradient(self.const, points, self.chart, h)
        if self.coeffs is None:
            d1 = np.zeros((n, dim, dim, 2, 2), complex)
        else:
            d1 = fields.fd_gradient(self.coeffs, points, self.chart, h)
        return d0, d1

    def __call__(self, points, p):
        """Values at momenta ``p`` of shape ``(dim,)`` or ``(N, dim)``."""
        pts = np.atleast_2d(points)
        c0, c1 = self.parts(pts)
        p = np.asarray(p, dtype=float)
        spec = "naij,a->nij" if p.ndim == 1 else "naij,na->nij"
        return c0 + np.einsum(spec, c1, p)


@dataclass(frozen=True)
class PolySymbol:
    """Values at a set of points of a symbol quadratic in momentum:
    ``const + linear_a p_a + quad_ab p_a p_b``."""

    const: np.ndarray  # (N, 2, 2)
    linear: np.ndarray  # (N, dim, 2, 2)
    quad: np.ndarray  # (N, dim, dim, 2, 2)

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            p = np.broadcast_to(p, self.const.shape[:1] + p.shape)
        return (self.const
                + np.einsum("naij,na->nij", self.linear, p)
                + np.einsum("nabij,na,nb->nij", self.quad, p, p))

    def p_hessian(self) -> np.ndarray:
        """Second momentum derivatives ``d^2/dp_a dp_b``: ``(N, dim, dim, 2, 2)``."""
        return self.quad + np.swapaxes(self.quad, 1, 2)


def bracket3(F: LinearSymbol, G: LinearSymbol, H: LinearSymbol, points,
             h: float | None = None) -> PolySymbol:
    """``{F, G, H} = F_{x^g} G H_{p_g} - F_{p_g} G H_{x^g}`` at ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    G0, Gc = G.parts(pts)
    _, Fc = F.parts(pts)
    _, Hc = H.parts(pts)
    dF0, dF = F.x_derivatives(pts, h)
    dH0, dH = H.x_derivatives(pts, h)
    def ein(spec, *ops):
        return np.einsum(spec, *ops, optimize=True)

    # F_{x^g} G H_{p_g}
    const = ein("ngij,njk,ngkl->nil", dF0, G0, Hc)
    lin = ein("ngaij,njk,ngkl->nail", dF, G0, Hc)
    lin += ein("ngij,nbjk,ngkl->nbil", dF0, Gc, Hc)
    quad = ein("ngaij,nbjk,ngkl->nabil", dF, Gc, Hc)

    # F_{p_g} G H_{x^g}
    const -= ein("ngij,njk,ngkl->nil", Fc, G0, dH0)
    lin -= ein("ngij,njk,ngakl->nail", Fc, G0, dH)
    lin -= ein("ngij,nbjk,ngkl->nbil", Fc, Gc, dH0)
    quad -= ein("ngij,najk,ngbkl->nabil", Fc, Gc, dH)
    return PolySymbol(const, lin, quad)


def correction_term(sym: PrincipalSymbol, g: MetricField, points, h=None) -> np.ndarray:
    """``(i/16) g_ab {L_prin, adj L_prin, L_prin}_{p_a p_b}`` at ``points``.

    Only the part of the bracket quadratic in ``p`` survives two momentum
    derivatives, and for symmetric ``g_ab`` the contraction is
    ``(i/8) sum_{g,a,b} g_ab (dP_{g,a} adjP_b P_g - P_g adjP_a dP_{g,b})``.
    Same value as contracting :func:`bracket3`'s Hessian, without forming it.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    P = np.asarray(sym.coefficients(pts), dtype=complex)
    dP = fields.fd_gradient(sym.coefficients, pts, sym.chart, h)  # (N, g, a, 2, 2)
    gl = g.lower(pts)
    Gt = np.einsum("nab,nbij->naij", gl, adjugate(P))
    first = (dP @ Gt[:, None] @ P[:, :, None]).sum(axis=(1, 2))
    second = (P[:, :, None] @ Gt[:, None] @ dP).sum(axis=(1, 2))
    return (1j / 8) * (first - second)


def correction_term_reference(sym: PrincipalSymbol, g: MetricField, points, h=None) -> np.ndarray:
    """:func:`correction_term` through the full bracket (slower; for checks)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    L = LinearSymbol.of(sym)
    adjL = LinearSymbol(sym.chart, coeffs=lambda x: adjugate(sym.coefficients(x)))
    hess = bracket3(L, adjL, L, pts, h).p_hessian()
    return (1j / 16) * np.einsum("nab,nabij->nij", g.lower(pts), hess)


@dataclass(frozen=True)
class CovariantSub:
    """The covariant subprincipal symbol as a field ``(N, 2, 2)``."""

    func: Field
    chart: Chart

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        out = np.asarray(self.func(np.atleast_2d(pts)), dtype=complex)
        return out[0] if pts.ndim == 1 else out

    def check_hermitian(self, tol: float = CSUB_HERMITIAN_TOL, nodes=None) -> float:
        on_grid = nodes is None
        nodes = self.chart.nodes() if on_grid else np.atleast_2d(nodes)
        defect = hermitian_defect(fields.evaluate_on_grid(self, self.chart, nodes))
        fields.raise_at(defect <= tol, "covariant subprincipal symbol is not Hermitian",
                        self.chart, nodes, on_grid=on_grid)
        return float(defect.max())


def covariant_subprincipal(op: OperatorData, g: MetricField | None = None,
                           h: float | None = None, check: bool = False) -> CovariantSub:
    """``L_csub = L_sub + (i/16) g_ab {L_prin, adj L_prin, L_prin}_{p_a p_b}``.

    The bracket is quadratic in momentum; its second momentum derivatives
    are contracted with the covariant metric.  With ``check`` the result is
    verified Hermitian on the grid.
    """
    sym = op.principal_symbol
    if g is None:
        g = metric_from_symbol(sym, check=False)

    def func(points):
        return subprincipal_symbol(op, points, h) + correction_term(sym, g, points, h)

    csub = CovariantSub(func, op.chart)
    if check:
        csub.check_hermitian()
    return csub


@dataclass(frozen=True)
class Potential:
    """A covector field ``A_a``; ``func`` returns real ``(N, dim)``."""

    func: Field
    chart: Chart
    imag_func: Field | None = None

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        out = np.asarray(self.func(np.atleast_2d(pts)), dtype=float)
        return out[0] if pts.ndim == 1 else out

    def imag_residue(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.imag_func is None:
            return np.zeros(len(pts))
        return np.asarray(self.imag_func(pts))

    @classmethod
    def from_exprs(cls, row, chart: Chart) -> "Potential":
        vfs = fields.VectorFieldSet.parse([row], chart)
        return cls(lambda x: vfs(x)[:, 0], chart)

    @classmethod
    def constant(cls, values, chart: Chart) -> "Potential":
        return cls(fields.constant_field(np.asarray(values, dtype=float), chart), chart)


def _solve_potential(csub_vals, e):
    dim = e.shape[-1]
    c = 0.5 * np.einsum("jkl,nlk->nj", PAULI[:dim], csub_vals)
    return np.linalg.solve(e.astype(complex), c[..., None])[..., 0]


def _potential_checks(chart, nodes, e, csub_vals, tol, on_grid=True):
    fields.raise_at(np.abs(np.linalg.det(e)) > SINGULAR_TOL, "frame matrix is singular",
                    chart, nodes, on_grid=on_grid)
    A = _solve_potential(csub_vals, e)
    imag = np.abs(A.imag).max(axis=-1)
    fields.raise_at(imag <= tol, "potential has an imaginary part", chart, nodes,
                    on_grid=on_grid)
    return A.real, imag


def potential_on_grid(csub_vals: np.ndarray, e: np.ndarray, chart: Chart, nodes=None,
                      tol: float = POTENTIAL_IMAG_TOL):
    """Potential from precomputed node values of ``L_csub`` and the frame.

    Returns ``(A, imag)``: the real potential ``(N, dim)`` and the per-node
    largest imaginary part of the solution.

    Raises:
        ValidationError: as :func:`extract_potential`.
    """
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    return _potential_checks(chart, nodes, e, csub_vals, tol, on_grid)


def extract_potential(csub: CovariantSub, frame, check: bool = True,
                      tol: float = POTENTIAL_IMAG_TOL) -> Potential:
    """Solve ``L_csub(x) = L_prin(x, A(x))`` for the real covector ``A``.

    With ``c_j = (1/2) tr(s^j L_csub)`` this is the linear system
    ``e_j^a A_a = c_j`` at each point.

    Raises:
        ValidationError: (with ``check``) if the frame is singular at a node
            or the solution has an imaginary part above ``tol``.
    """
    chart = csub.chart

    def complex_solution(points):
        return _solve_potential(csub(points), frame(points))

    pot = Potential(lambda x: complex_solution(x).real, chart,
                    imag_func=lambda x: np.abs(complex_solution(x).imag).max(axis=-1))
    if check:
        nodes = chart.nodes()
        e = fields.evaluate_on_grid(frame, chart, nodes)
        vals = fields.evaluate_on_grid(csub, chart, nodes)
        _potential_checks(chart, nodes, e, vals, tol)
    return pot


def representation_residual(csub_vals: np.ndarray, P: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``|L_csub - L_prin(x, A)|`` per point; nonzero when the csub has a
    component outside the span of the ``P_a`` (e.g. a trace in dim 3)."""
    return np.abs(csub_vals - np.einsum("naij,na->nij", P, A)).max(axis=(-1, -2))


def build_operator(frame, A: Field, base_sub: Field | None = None,
                   g: MetricField | None = None, h: float | None = None) -> OperatorData:
    """An operator with principal symbol ``s^j e_j^a p_a`` and covariant
    subprincipal symbol ``L_prin(x, A(x)) + base_sub(x)``.

    ``F^a = -i s^j e_j^a`` and ``G = L_sub,target + (1/2) d_a F^a`` where
    ``L_sub,target`` is the target with the bracket correction removed.
    """
    chart = frame.chart
    sym = frame_to_symbol(frame)
    if g is None:
        g = metric_from_symbol(sym, check=False)

    def F(points):
        return -1j * sym.coefficients(points)

    def G(points):
        pts = np.atleast_2d(points)
        target = np.einsum("naij,na->nij", sym.coefficients(pts), np.asarray(A(pts), dtype=float))
        if base_sub is not None:
            target = target + np.asarray(base_sub(pts))
        out = target - correction_term(sym, g, pts, h)
        for a in range(chart.dim):
            out = out + 0.5 * fields.fd_partial(F, pts, a, chart, h)[:, a]
        return out

    return OperatorData(F, G, chart)

