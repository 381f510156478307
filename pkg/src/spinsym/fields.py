"""Charts, evaluated fields and finite-difference calculus.

A *field* here is any callable taking an array of points of shape
``(N, dim)`` and returning an array of shape ``(N, ...)``.  The classes in
this module wrap parsed expressions into such callables; every other
module composes plain callables on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Sequence

import numpy as np

from . import exprdsl
from .errors import GridError, StencilError, ValidationError

Field = Callable[[np.ndarray], np.ndarray]

DEFAULT_N = 16
DEFAULT_CHUNK = 8192
# relative default step: h = (hi - lo) * FD_STEP
FD_STEP = 1e-5


@dataclass(frozen=True)
class Chart:
    """A coordinate box standing in for the manifold.

    Periodic axes identify ``lo`` with ``hi``; grid nodes on them are
    ``lo + k*(hi-lo)/n``.  Non-periodic axes use cell centres so that the
    boundary itself is never a node.
    """

    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    periodic: tuple[bool, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (3, 4):
            raise ValueError(f"chart dimension must be 3 or 4, got {self.dim}")
        for name in ("lo", "hi", "periodic", "n"):
            value = getattr(self, name)
            if len(value) != self.dim:
                raise ValueError(f"chart.{name} must have {self.dim} entries")
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        object.__setattr__(self, "periodic", tuple(bool(v) for v in self.periodic))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        for a in range(self.dim):
            if not self.lo[a] < self.hi[a]:
                raise ValueError(f"chart axis {a + 1}: lo must be < hi")
            if self.n[a] < 8:
                raise ValueError(f"chart axis {a + 1}: need at least 8 grid points, got {self.n[a]}")

    @classmethod
    def box(cls, dim: int, n: int = DEFAULT_N, lo: float = 0.0, hi: float = 1.0,
            periodic: bool | Sequence[bool] = True) -> "Chart":
        if isinstance(periodic, bool):
            periodic = (periodic,) * dim
        return cls(dim, (lo,) * dim, (hi,) * dim, tuple(periodic), (n,) * dim)

    def with_n(self, n: int) -> "Chart":
        return Chart(self.dim, self.lo, self.hi, self.periodic, (n,) * self.dim)

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def basepoint(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    def axis_nodes(self, axis: int) -> np.ndarray:
        lo, hi, n = self.lo[axis], self.hi[axis], self.n[axis]
        k = np.arange(n, dtype=float)
        if self.periodic[axis]:
            return lo + k * (hi - lo) / n
        return lo + (k + 0.5) * (hi - lo) / n

    def nodes(self) -> np.ndarray:
        """All grid nodes as an ``(N, dim)`` array in C order."""
        axes = np.meshgrid(*[self.axis_nodes(a) for a in range(self.dim)], indexing="ij")
        return np.stack([ax.ravel() for ax in axes], axis=-1)

    def index_of(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.n))

    def wrap(self, points: np.ndarray) -> np.ndarray:
        pts = np.array(points, dtype=float, copy=True)
        for a in range(self.dim):
            if self.periodic[a]:
                w = self.hi[a] - self.lo[a]
                pts[..., a] = self.lo[a] + np.mod(pts[..., a] - self.lo[a], w)
        return pts

    def default_step(self, axis: int) -> float:
        return (self.hi[axis] - self.lo[axis]) * FD_STEP


def default_chart(dim: int) -> Chart:
    """``[0,1]^dim``, every axis periodic, 16 nodes per axis."""
    return Chart.box(dim)


# ---------------------------------------------------------------- fields


def _as_points(points, dim):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have last axis {dim}, got {pts.shape}")
    return pts, single


@dataclass(frozen=True)
class ScalarField:
    """A real scalar field given by an expression."""

    expr: exprdsl.Expr
    chart: Chart

    @classmethod
    def parse(cls, source: str, chart: Chart) -> "ScalarField":
        return cls(exprdsl.parse(source, chart.dim), chart)

    def __call__(self, points):
        return self.evaluate_unwrapped(self.chart.wrap(points))

    def evaluate_unwrapped(self, points):
        pts, single = _as_points(points, self.chart.dim)
        vals = exprdsl.evaluate(self.expr, pts)
        return vals[0] if single else vals


@dataclass(frozen=True)
class VectorFieldSet:
    """A ``rows x dim`` table of expressions.

    Used for frames (row ``j`` is the vector field ``e_j``), single vector
    or covector fields (one row) and potentials.
    """

    table: tuple[tuple[exprdsl.Expr, ...], ...]
    chart: Chart

    @classmethod
    def parse(cls, rows: Sequence[Sequence[str]], chart: Chart) -> "VectorFieldSet":
        table = []
        for r, row in enumerate(rows):
            if len(row) != chart.dim:
                raise ValueError(f"row {r + 1} has {len(row)} entries, expected {chart.dim}")
            table.append(tuple(exprdsl.parse(s, chart.dim) for s in row))
        return cls(tuple(table), chart)

    def __call__(self, points):
        return self.evaluate_unwrapped(self.chart.wrap(points))

    def evaluate_unwrapped(self, points):
        pts, single = _as_points(points, self.chart.dim)
        out = np.stack(
            [np.stack([exprdsl.evaluate(e, pts) for e in row], axis=-1) for row in self.table],
            axis=-2,
        )
        return out[0] if single else out


@dataclass(frozen=True)
class MatrixField:
    """A 2x2 complex matrix field with entries given as (re, im) expressions."""

    entries: tuple[tuple[exprdsl.ComplexExpr, exprdsl.ComplexExpr],
                   tuple[exprdsl.ComplexExpr, exprdsl.ComplexExpr]]
    chart: Chart

    @classmethod
    def parse(cls, re_rows, im_rows, chart: Chart) -> "MatrixField":
        """``re_rows``/``im_rows`` are 2x2 nested sequences of source strings;
        ``im_rows`` may be ``None`` for a real matrix."""
        entries = []
        for i in range(2):
            row = []
            for j in range(2):
                im = None if im_rows is None else im_rows[i][j]
                row.append(exprdsl.ComplexExpr.parse(re_rows[i][j], im, chart.dim))
            entries.append(tuple(row))
        return cls(tuple(entries), chart)

    def __call__(self, points):
        return self.evaluate_unwrapped(self.chart.wrap(points))

    def evaluate_unwrapped(self, points):
        pts, single = _as_points(points, self.chart.dim)
        out = np.empty(pts.shape[:-1] + (2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[..., i, j] = self.entries[i][j].evaluate(pts)
        return out[0] if single else out


def constant_field(value, chart: Chart) -> Field:
    """Field returning ``value`` at every point."""
    value = np.asarray(value)

    def f(points):
        pts, single = _as_points(points, chart.dim)
        out = np.broadcast_to(value, pts.shape[:-1] + value.shape).copy()
        return out[0] if single else out

    return f


def check_periodic(f: Field, chart: Chart, samples: int = 64, tol: float = 1e-9,
                   seed: int = 0) -> float:
    """Check ``f(.., lo, ..) == f(.., hi, ..)`` on every periodic axis.

    Expression-backed fields are compared through their unwrapped
    evaluation so that the identification of the faces is actually tested.
    Returns the largest mismatch.

    Raises:
        ValidationError: if the mismatch exceeds ``tol``.
    """
    f = getattr(f, "evaluate_unwrapped", f)
    rng = np.random.default_rng(seed)
    lo, w = chart.basepoint, chart.width
    worst = 0.0
    for a in range(chart.dim):
        if not chart.periodic[a]:
            continue
        pts = lo + rng.random((samples, chart.dim)) * w
        p_lo, p_hi = pts.copy(), pts.copy()
        p_lo[:, a] = chart.lo[a]
        p_hi[:, a] = chart.hi[a]
        diff = np.abs(np.asarray(f(p_lo)) - np.asarray(f(p_hi)))
        diff = diff.reshape(samples, -1).max(axis=1)
        k = int(np.argmax(diff))
        worst = max(worst, float(diff[k]))
        if diff[k] > tol:
            raise ValidationError(
                f"field is not periodic along axis {a + 1} (mismatch {diff[k]:.3g})",
                point=p_lo[k],
            )
    return worst


# --------------------------------------------------------- differentiation


def _stencil_points(points, axis, h, chart):
    step = np.zeros(chart.dim)
    step[axis] = h
    plus, minus = points + step, points - step
    if not chart.periodic[axis]:
        bad = (plus[..., axis] > chart.hi[axis]) | (minus[..., axis] < chart.lo[axis])
        if np.any(bad):
            k = int(np.flatnonzero(bad.ravel())[0])
            raise StencilError(
                f"central difference along axis {axis + 1} with h={h:g} leaves the chart "
                f"at x = {tuple(np.atleast_2d(points)[k])}"
            )
    return plus, minus


def fd_partial(f: Field, points, axis: int, chart: Chart, h: float | None = None):
    """Central difference ``(f(x + h e_axis) - f(x - h e_axis)) / 2h``.

    ``axis`` is 0-based.  Periodic axes wrap; stencils that would leave a
    non-periodic axis raise :class:`StencilError`.
    """
    if h is None:
        h = chart.default_step(axis)
    pts = np.asarray(points, dtype=float)
    plus, minus = _stencil_points(pts, axis, h, chart)
    return (np.asarray(f(plus)) - np.asarray(f(minus))) / (2.0 * h)


def fd_gradient(f: Field, points, chart: Chart, h: float | None = None) -> np.ndarray:
    """All partial derivatives, stacked on a new axis right after the point
    axis: result shape ``(N, dim, ...)``."""
    parts = [fd_partial(f, points, a, chart, h) for a in range(chart.dim)]
    return np.stack(parts, axis=1 if np.asarray(points).ndim > 1 else 0)


# ------------------------------------------------------------ grid sweeps


@dataclass(frozen=True)
class Reducer:
    """Combines per-node values chunk by chunk.

    ``partial`` maps a chunk of values to a partial aggregate, ``combine``
    merges two partials.  Reducers with ``ordered=False`` must be
    associative and commutative.
    """

    name: str
    partial: Callable[[np.ndarray], Any]
    combine: Callable[[Any, Any], Any]
    initial: Any
    ordered: bool = False
    finish: Callable[[Any], Any] = dc_field(default=lambda r: r)


def _absmax(values):
    values = np.asarray(values)
    return float(np.max(np.abs(values))) if values.size else 0.0


max_norm = Reducer("max-norm", _absmax, max, 0.0)
all_true = Reducer("all-true", lambda v: bool(np.all(v)), lambda a, b: a and b, True)
collect = Reducer("collect", lambda v: list(v), lambda a, b: a + b, [], ordered=True)


def grid_sweep(fn: Field, chart: Chart, reducer: Reducer = collect, nodes=None,
               chunk: int = DEFAULT_CHUNK):
    """Evaluate ``fn`` on every grid node and fold the results.

    ``fn`` receives chunks of nodes (``(M, dim)`` arrays) and returns one
    value per node.  A :class:`GridError` raised from a chunk carrying a
    chunk-local flat index is re-raised with the global grid multi-index.
    """
    if nodes is None:
        nodes = chart.nodes()
        on_grid = True
    else:
        nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
        on_grid = False
    acc = reducer.initial
    for start in range(0, len(nodes), chunk):
        block = nodes[start:start + chunk]
        try:
            values = fn(block)
        except GridError as err:
            if err.index is None or len(err.index) != 1:
                raise
            flat = start + err.index[0]
            index = chart.index_of(flat) if on_grid else (flat,)
            raise type(err)(_strip_location(err), index=index, point=nodes[flat]) from err
        acc = reducer.combine(acc, reducer.partial(values))
    return reducer.finish(acc)


def _strip_location(err):
    msg = str(err)
    cut = msg.find(" at node ")
    return msg if cut < 0 else msg[:cut]


def first_failure(mask: np.ndarray):
    """Index of the first ``False`` entry of a boolean per-node mask, or
    ``None``."""
    bad = np.flatnonzero(~np.asarray(mask, dtype=bool))
    return None if bad.size == 0 else int(bad[0])


def evaluate_on_grid(fn: Field, chart: Chart, nodes=None, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Stack the values of ``fn`` over the grid (or ``nodes``)."""
    if nodes is None:
        nodes = chart.nodes()
    parts = [np.asarray(fn(nodes[s:s + chunk])) for s in range(0, len(nodes), chunk)]
    return np.concatenate(parts, axis=0)


def raise_at(mask, message: str, chart: Chart, nodes, error=ValidationError, on_grid=True):
    """Raise ``error`` at the first node where ``mask`` is False."""
    k = first_failure(mask)
    if k is None:
        return
    index = chart.index_of(k) if on_grid else (k,)
    raise error(message, index=index, point=nodes[k])
