"""Symbol calculus of 2x2 first-order operators ``L = F^a d_a + G``.

Conventions:

* points are ``(N, dim)`` arrays; fields return ``(N, ...)`` arrays;
* a frame is an ``(N, dim, dim)`` array whose row ``j`` is the vector
  field ``e_j`` with components ``e_j^a``;
* a principal symbol is stored through its momentum derivatives
  ``P_a = (L_prin)_{p_a} = i F^a``, an ``(N, dim, 2, 2)`` array, so that
  ``L_prin(x, p) = P_a(x) p_a``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import NumericalFault
from .fields import Chart, Field

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
        [[1, 0], [0, 1]],
    ],
    dtype=complex,
)
PAULI.setflags(write=False)

HERMITIAN_TOL = 1e-9
NONDEGENERATE_TOL = 1e-10
SIGNATURE_TOL = 1e-9
LIGHTLIKE_TOL = 1e-9
CHARGE_TOL = 1e-6


def pauli_basis(dim: int) -> np.ndarray:
    """``s^1 .. s^dim`` as a ``(dim, 2, 2)`` array (``s^4`` is the identity)."""
    if dim not in (3, 4):
        raise ValueError(f"dim must be 3 or 4, got {dim}")
    return PAULI[:dim].copy()


def eta(dim: int) -> np.ndarray:
    """Frame metric: ``diag(1,1,1,-1)`` in dimension 4, identity in 3."""
    return np.diag([1.0, 1.0, 1.0, -1.0]) if dim == 4 else np.eye(3)


def hermitian_defect(m: np.ndarray) -> np.ndarray:
    """Max-abs of the anti-Hermitian part over the trailing 2x2 axes."""
    d = m - np.conj(np.swapaxes(m, -1, -2))
    return 0.5 * np.abs(d).max(axis=(-1, -2))


def det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def _points(points, dim):
    pts = np.asarray(points, dtype=float)
    return np.atleast_2d(pts), pts.ndim == 1


# ----------------------------------------------------------------- types


@dataclass(frozen=True)
class Frame:
    """A field of ``dim`` vector fields; ``func`` returns ``(N, dim, dim)``."""

    func: Field
    chart: Chart

    @property
    def dim(self) -> int:
        return self.chart.dim

    def __call__(self, points):
        pts, single = _points(points, self.dim)
        out = np.asarray(self.func(pts), dtype=float)
        return out[0] if single else out

    @classmethod
    def from_exprs(cls, rows, chart: Chart) -> "Frame":
        """``rows[j][a]`` is the source of ``e_{j+1}^{a+1}``."""
        if len(rows) != chart.dim:
            raise ValueError(f"frame needs {chart.dim} rows, got {len(rows)}")
        return cls(fields.VectorFieldSet.parse(rows, chart), chart)

    @classmethod
    def constant(cls, matrix, chart: Chart) -> "Frame":
        return cls(fields.constant_field(np.asarray(matrix, dtype=float), chart), chart)

    @classmethod
    def identity(cls, chart: Chart) -> "Frame":
        return cls.constant(np.eye(chart.dim), chart)


@dataclass(frozen=True)
class PrincipalSymbol:
    """``L_prin(x, p) = P_a(x) p_a`` with ``coeffs(x) -> P`` of shape
    ``(N, dim, 2, 2)``."""

    coeffs: Field
    chart: Chart

    @property
    def dim(self) -> int:
        return self.chart.dim

    def coefficients(self, points) -> np.ndarray:
        pts, single = _points(points, self.dim)
        out = np.asarray(self.coeffs(pts), dtype=complex)
        return out[0] if single else out

    def __call__(self, points, p) -> np.ndarray:
        """Evaluate at momenta ``p``: shape ``(dim,)`` or ``(N, dim)``."""
        P = self.coefficients(points)
        return np.einsum("...aij,...a->...ij", P, np.asarray(p, dtype=float))


@dataclass(frozen=True)
class MetricField:
    """Contravariant metric ``g^{ab}`` with its pointwise inverse."""

    upper_func: Field
    chart: Chart

    @property
    def dim(self) -> int:
        return self.chart.dim

    def upper(self, points) -> np.ndarray:
        pts, single = _points(points, self.dim)
        g = np.asarray(self.upper_func(pts), dtype=float)
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        return g[0] if single else g

    def lower(self, points) -> np.ndarray:
        return np.linalg.inv(self.upper(points))

    @classmethod
    def constant(cls, g_upper, chart: Chart) -> "MetricField":
        return cls(fields.constant_field(np.asarray(g_upper, dtype=float), chart), chart)

    @classmethod
    def minkowski(cls, chart: Chart) -> "MetricField":
        return cls.constant(eta(chart.dim), chart)

    def check_signature(self, nodes=None):
        """Raise :class:`ValidationError` at the first node with the wrong
        signature: ``(+,+,+,-)`` in dimension 4, positive definite in 3."""
        on_grid = nodes is None
        nodes = self.chart.nodes() if on_grid else np.atleast_2d(nodes)
        g = fields.evaluate_on_grid(self.upper, self.chart, nodes)
        ok = signature_ok(g)
        want = "(+,+,+,-)" if self.dim == 4 else "positive definite"
        fields.raise_at(ok, f"metric does not have signature {want}", self.chart, nodes,
                        on_grid=on_grid)
        return self


def signature_counts(g: np.ndarray, tol: float = SIGNATURE_TOL):
    """Numbers of positive and negative eigenvalues of each normalised
    symmetric matrix in ``g`` (shape ``(N, d, d)``)."""
    scale = np.abs(g).max(axis=(-1, -2), keepdims=True)
    scale = np.where(scale == 0, 1.0, scale)
    w = np.linalg.eigvalsh(g / scale)
    return (w > tol).sum(axis=-1), (w < -tol).sum(axis=-1)


def signature_ok(g: np.ndarray) -> np.ndarray:
    d = g.shape[-1]
    pos, neg = signature_counts(g)
    if d == 4:
        return (pos == 3) & (neg == 1)
    return pos == d


@dataclass(frozen=True)
class Charges:
    c_top: int
    c_tem: int | None = None

    def as_tuple(self):
        return (self.c_top,) if self.c_tem is None else (self.c_top, self.c_tem)


# --------------------------------------------------- frame <-> symbol map


def frame_to_symbol(frame: Frame) -> PrincipalSymbol:
    """``L_prin(x, p) = s^j e_j^a(x) p_a``."""
    s = PAULI[: frame.dim]

    def coeffs(points):
        e = np.asarray(frame(points), dtype=float)
        return np.tensordot(e, s, axes=([-2], [0]))

    return PrincipalSymbol(coeffs, frame.chart)


def frame_from_coefficients(P: np.ndarray) -> np.ndarray:
    """``e_j^a = (1/2) tr(s^j P_a)``; the inverse of :func:`frame_to_symbol`
    on arrays.  In dimension 3 any trace part of ``P`` is discarded."""
    dim = P.shape[-3]
    s = PAULI[:dim]
    return 0.5 * np.einsum("jkl,...alk->...ja", s, P).real


def symbol_to_frame(sym: PrincipalSymbol, check: bool = True) -> Frame:
    """Read the frame off a Hermitian principal symbol.

    Raises:
        ValidationError: if ``check`` and some ``P_a`` is not Hermitian at
            a grid node.
    """
    if check:
        check_symbol_hermitian(sym)

    def func(points):
        return frame_from_coefficients(sym.coefficients(np.atleast_2d(points)))

    return Frame(func, sym.chart)


def check_symbol_hermitian(sym: PrincipalSymbol, tol: float = 1e-12, nodes=None) -> float:
    chart = sym.chart
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    P = fields.evaluate_on_grid(sym.coefficients, chart, nodes)
    scale = max(1.0, float(np.abs(P).max()))
    defect = hermitian_defect(P).max(axis=-1)
    fields.raise_at(defect <= tol * scale, "principal symbol is not Hermitian", chart, nodes,
                    on_grid=on_grid)
    return float(defect.max())


# ---------------------------------------------------------- operators


@dataclass(frozen=True)
class OperatorData:
    """Coefficients of ``L = F^a(x) d/dx^a + G(x)``.

    ``F`` returns ``(N, dim, 2, 2)`` (all ``F^a`` stacked), ``G`` returns
    ``(N, 2, 2)``.
    """

    F: Field
    G: Field
    chart: Chart

    @property
    def dim(self) -> int:
        return self.chart.dim

    @classmethod
    def from_fields(cls, F_list, G, chart: Chart) -> "OperatorData":
        if len(F_list) != chart.dim:
            raise ValueError(f"need {chart.dim} matrices F^a, got {len(F_list)}")

        def F(points):
            return np.stack([np.asarray(f(points)) for f in F_list], axis=1)

        return cls(F, G, chart)

    @property
    def principal_symbol(self) -> PrincipalSymbol:
        F = self.F
        return PrincipalSymbol(lambda points: 1j * np.asarray(F(points)), self.chart)

    @property
    def frame(self) -> Frame:
        return symbol_to_frame(self.principal_symbol, check=False)


def subprincipal_symbol(op: OperatorData, points, h: float | None = None) -> np.ndarray:
    """``L_sub = G - (1/2) d_a F^a`` with central differences."""
    pts, single = _points(points, op.dim)
    out = np.asarray(op.G(pts), dtype=complex).copy()
    for a in range(op.dim):
        dF = fields.fd_partial(op.F, pts, a, op.chart, h)
        out -= 0.5 * dF[:, a]
    return out[0] if single else out


@dataclass(frozen=True)
class SelfAdjointReport:
    principal_defect: float
    subprincipal_defect: float
    trace_defect: float | None = None

    @property
    def worst(self) -> float:
        vals = [self.principal_defect, self.subprincipal_defect]
        if self.trace_defect is not None:
            vals.append(self.trace_defect)
        return max(vals)


def check_self_adjoint(op: OperatorData, tol: float = HERMITIAN_TOL, h=None,
                       nodes=None, raise_on_failure: bool = True) -> SelfAdjointReport:
    """Hermiticity of ``i F^a`` and ``L_sub`` at every node (and trace-freeness
    of the principal symbol in dimension 3)."""
    chart = op.chart
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    P = fields.evaluate_on_grid(op.principal_symbol.coefficients, chart, nodes)
    sub = fields.evaluate_on_grid(lambda x: subprincipal_symbol(op, x, h), chart, nodes)
    dp = hermitian_defect(P).max(axis=-1)
    ds = hermitian_defect(sub)
    dt = None
    if op.dim == 3:
        dt = np.abs(np.trace(P, axis1=-2, axis2=-1)).max(axis=-1)
    if raise_on_failure:
        fields.raise_at(dp <= tol, "i F^a is not Hermitian", chart, nodes, on_grid=on_grid)
        fields.raise_at(ds <= tol, "subprincipal symbol is not Hermitian", chart, nodes,
                        on_grid=on_grid)
        if dt is not None:
            fields.raise_at(dt <= tol, "principal symbol is not trace-free", chart, nodes,
                            on_grid=on_grid)
    return SelfAdjointReport(float(dp.max()), float(ds.max()),
                             None if dt is None else float(dt.max()))


# ------------------------------------------------------ non-degeneracy


@dataclass(frozen=True)
class NondegeneracyResult:
    ok: bool
    min_abs_det: float
    witness_index: tuple[int, ...] | None = None
    witness_point: tuple[float, ...] | None = None

    def __bool__(self):
        return self.ok


def _as_frame(obj) -> Frame:
    if isinstance(obj, Frame):
        return obj
    if isinstance(obj, PrincipalSymbol):
        return symbol_to_frame(obj, check=False)
    raise TypeError(f"expected a Frame or PrincipalSymbol, got {type(obj).__name__}")


def check_nondegenerate(obj, tol: float = NONDEGENERATE_TOL, nodes=None) -> NondegeneracyResult:
    """``|det e_j^a| > tol`` at every node; on failure the first offending
    node is returned as witness."""
    frame = _as_frame(obj)
    chart = frame.chart
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    dets = np.abs(np.linalg.det(fields.evaluate_on_grid(frame, chart, nodes)))
    k = fields.first_failure(dets > tol)
    if k is None:
        return NondegeneracyResult(True, float(dets.min()))
    index = chart.index_of(k) if on_grid else (k,)
    return NondegeneracyResult(False, float(dets.min()), index, tuple(nodes[k]))


@dataclass(frozen=True)
class EllipticityResult:
    trace_free: bool
    elliptic: bool
    max_trace: float
    min_abs_det: float

    def __bool__(self):
        return self.trace_free and self.elliptic


def check_elliptic_tracefree(sym: PrincipalSymbol, tol: float = NONDEGENERATE_TOL,
                             nodes=None) -> EllipticityResult:
    """Dimension 3: ``tr L_prin == 0`` and ``det L_prin(x, p) != 0`` for
    ``p != 0``, at every node.

    ``det L_prin(x, p)`` is the quadratic form ``-g^{ab} p_a p_b``, so its
    smallest modulus on the unit sphere is the smallest eigenvalue
    modulus of ``g`` when the form is definite, and zero otherwise.
    """
    if sym.dim != 3:
        raise ValueError("the ellipticity / trace-free check is for dimension 3")
    chart = sym.chart
    nodes = chart.nodes() if nodes is None else np.atleast_2d(nodes)
    P = fields.evaluate_on_grid(sym.coefficients, chart, nodes)
    max_trace = float(np.abs(np.trace(P, axis1=-2, axis2=-1)).max())
    w = np.linalg.eigvalsh(metric_from_coefficients(P))
    definite = (w[:, 0] > 0) | (w[:, -1] < 0)
    min_det = float(np.where(definite, np.abs(w).min(axis=-1), 0.0).min())
    return EllipticityResult(max_trace <= 1e-12 * max(1.0, float(np.abs(P).max())),
                             min_det > tol, max_trace, min_det)


# ---------------------------------------------------------------- metric


def metric_from_coefficients(P: np.ndarray) -> np.ndarray:
    """Polarise ``det L_prin(x, p) = -g^{ab} p_a p_b`` over basis momenta."""
    dim = P.shape[-3]
    d = det2(P).real
    g = np.empty(P.shape[:-3] + (dim, dim))
    for a in range(dim):
        g[..., a, a] = -d[..., a]
        for b in range(a + 1, dim):
            mixed = det2(P[..., a, :, :] + P[..., b, :, :]).real
            g[..., a, b] = g[..., b, a] = -0.5 * (mixed - d[..., a] - d[..., b])
    return g


def metric_from_symbol(sym: PrincipalSymbol, check: bool = True, nodes=None) -> MetricField:
    """Metric of a non-degenerate principal symbol.

    Raises:
        ValidationError: if ``check`` and the signature is wrong at a node.
    """
    def upper(points):
        return metric_from_coefficients(sym.coefficients(np.atleast_2d(points)))

    g = MetricField(upper, sym.chart)
    if check:
        g.check_signature(nodes)
    return g


def metric_from_frame_oracle(e: np.ndarray) -> np.ndarray:
    """``g^{ab} = eta^{jk} e_j^a e_k^b`` directly from frame arrays."""
    return np.einsum("...ja,jk,...kb->...ab", e, eta(e.shape[-1]), e)


class CausalCharacter(enum.Enum):
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"
    TIMELIKE = "timelike"
    MIXED = "mixed"


def norm_squared(g: MetricField, u: Field, points) -> np.ndarray:
    pts = np.atleast_2d(points)
    return np.einsum("nab,na,nb->n", g.lower(pts), np.asarray(u(pts)), np.asarray(u(pts)))


def causal_character(g: MetricField, u: Field, nodes=None,
                     tol: float = LIGHTLIKE_TOL) -> CausalCharacter:
    """Sign class of ``g_ab u^a u^b`` over all nodes."""
    if g.dim != 4:
        raise ValueError("causal character is defined for Lorentzian (dim 4) metrics")
    nodes = g.chart.nodes() if nodes is None else np.atleast_2d(nodes)
    q = fields.evaluate_on_grid(lambda x: norm_squared(g, u, x), g.chart, nodes)
    if np.all(np.abs(q) < tol):
        return CausalCharacter.LIGHTLIKE
    if np.all(q >= tol):
        return CausalCharacter.SPACELIKE
    if np.all(q <= -tol):
        return CausalCharacter.TIMELIKE
    return CausalCharacter.MIXED


# --------------------------------------------------------------- charges

_PERMS4 = [
    (p, 1 if sum(p[i] > p[j] for i in range(4) for j in range(i + 1, 4)) % 2 == 0 else -1)
    for p in itertools.permutations(range(4))
]


def adjugate(m: np.ndarray) -> np.ndarray:
    """``[[a, b], [c, d]] -> [[d, -b], [-c, a]]`` over the trailing axes."""
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out


def charge_trace(P: np.ndarray, g_upper: np.ndarray) -> np.ndarray:
    """Trace formula for the topological charge (complex, per node).

    Dimension 3: ``-(i/2) sqrt(det g_ab) tr(P_1 P_2 P_3)``.

    Dimension 4: ``-(i/2) sqrt|det g_ab|`` times the trace of
    ``adj(P_1) P_2 adj(P_3) P_4`` antisymmetrised over the momentum slots.
    The adjugates and the antisymmetrisation remove the metric-dependent
    symmetric part that the plain product ``tr(P_1 P_2 P_3 P_4)`` picks up
    whenever the frame is not the identity; on the identity frame both
    products give ``2i``.
    """
    dim = P.shape[-3]
    vol = 1.0 / np.sqrt(np.abs(np.linalg.det(g_upper)))
    if dim == 3:
        t = np.trace(P[..., 0, :, :] @ P[..., 1, :, :] @ P[..., 2, :, :], axis1=-2, axis2=-1)
    else:
        A = adjugate(P)
        t = 0
        for (a, b, c, d), sign in _PERMS4:
            prod = A[..., a, :, :] @ P[..., b, :, :] @ A[..., c, :, :] @ P[..., d, :, :]
            t = t + sign * np.trace(prod, axis1=-2, axis2=-1)
        t = t / 24.0
    return -0.5j * vol * t


def _constant_sign(values, what, chart, nodes, on_grid):
    signs = np.sign(values)
    fields.raise_at(signs != 0, f"{what} vanishes", chart, nodes, on_grid=on_grid)
    fields.raise_at(signs == signs[0], f"{what} is not constant over the chart", chart, nodes,
                    on_grid=on_grid)
    return int(signs[0])


def topological_charge(sym: PrincipalSymbol, g: MetricField | None = None,
                       tol: float = CHARGE_TOL, nodes=None) -> int:
    """Orientation of the symbol relative to the chart coordinates.

    Both the trace formula and ``sgn det e`` are evaluated at every node and
    required to agree.

    Raises:
        NumericalFault: if the two computations differ by more than ``tol``.
        ValidationError: if the sign is not constant over the chart.
    """
    chart = sym.chart
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    if g is None:
        g = metric_from_symbol(sym, check=False)
    P = fields.evaluate_on_grid(sym.coefficients, chart, nodes)
    gu = fields.evaluate_on_grid(g.upper, chart, nodes)
    trace_value = charge_trace(P, gu)
    det_sign = np.sign(np.linalg.det(frame_from_coefficients(P)))
    gap = np.abs(trace_value - det_sign)
    fields.raise_at(gap <= tol, "trace formula and sgn det e disagree", chart, nodes,
                    error=NumericalFault, on_grid=on_grid)
    return _constant_sign(det_sign, "topological charge", chart, nodes, on_grid)


def temporal_charge(sym: PrincipalSymbol, q: Field | None = None, g: MetricField | None = None,
                    nodes=None) -> int:
    """``sgn tr L_prin(x, q(x)) = sgn(q_a e_4^a)`` for a timelike covector
    field ``q`` (default ``dx^4``).

    Raises:
        ValidationError: if ``q`` is not timelike at some node, or the sign
            is not constant.
    """
    if sym.dim != 4:
        raise ValueError("temporal charge is defined in dimension 4")
    chart = sym.chart
    on_grid = nodes is None
    nodes = chart.nodes() if on_grid else np.atleast_2d(nodes)
    if q is None:
        q = fields.constant_field(np.array([0.0, 0.0, 0.0, 1.0]), chart)
    if g is None:
        g = metric_from_symbol(sym, check=False)
    qv = fields.evaluate_on_grid(q, chart, nodes)
    gu = fields.evaluate_on_grid(g.upper, chart, nodes)
    qq = np.einsum("nab,na,nb->n", gu, qv, qv)
    fields.raise_at(qq < -LIGHTLIKE_TOL, "reference covector q is not timelike", chart, nodes,
                    on_grid=on_grid)
    P = fields.evaluate_on_grid(sym.coefficients, chart, nodes)
    tr = np.trace(np.einsum("naij,na->nij", P, qv), axis1=-2, axis2=-1).real
    return _constant_sign(tr, "temporal charge", chart, nodes, on_grid)


def charges(sym: PrincipalSymbol, q: Field | None = None, g: MetricField | None = None,
            nodes=None) -> Charges:
    c_top = topological_charge(sym, g, nodes=nodes)
    c_tem = temporal_charge(sym, q, g, nodes=nodes) if sym.dim == 4 else None
    return Charges(c_top, c_tem)


def trace_vector(P: np.ndarray) -> np.ndarray:
    """``e_4`` read from ``tr L_prin(x, p) = 2 e_4^a p_a``."""
    return 0.5 * np.trace(P, axis1=-2, axis2=-1).real

