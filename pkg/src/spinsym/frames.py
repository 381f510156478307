"""Orthonormal tetrads and triads from a metric.

In dimension 4 a normalised timelike field is kept as ``e_4`` and the
reference basis is orthonormalised in its orthogonal complement, where the
metric is Riemannian.  In dimension 3 the reference basis is
orthonormalised directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import ValidationError
from .fields import Field
from .symbols import Frame, MetricField, eta

PIVOT_TOL = 1e-8
ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class SeedData:
    g: MetricField
    e4_seed: Field | None = None
    reference_basis: Field | None = None  # (N, dim, dim), rows are vectors


def _inner(gl, u, v):
    return np.einsum("nab,na,nb->n", gl, u, v)


def normalize_timelike(g: MetricField, u: Field, check: bool = True) -> Field:
    """``u / sqrt(-g(u, u))``.

    Raises:
        ValidationError: if ``check`` and ``u`` is not timelike at a node.
    """
    if check:
        nodes = g.chart.nodes()
        norm2 = fields.evaluate_on_grid(lambda x: _inner(g.lower(x), u(x), u(x)), g.chart, nodes)
        fields.raise_at(norm2 < 0, "vector field is not timelike", g.chart, nodes)

    def unit(points):
        pts = np.atleast_2d(points)
        uv = np.asarray(u(pts), dtype=float)
        norm2 = _inner(g.lower(pts), uv, uv)
        if np.any(norm2 >= 0):
            k = int(np.flatnonzero(norm2 >= 0)[0])
            raise ValidationError("vector field is not timelike", index=(k,), point=pts[k])
        return uv / np.sqrt(-norm2)[:, None]

    return unit


def _orthonormalize(gl, refs, fixed, slots, tol):
    """Gram-Schmidt of the rows of ``refs`` against the (unit, signature
    ``sign``) vectors in ``fixed``, filling ``slots`` vectors per point.

    Returns the orthonormal vectors ``(N, slots, dim)`` and, per point, the
    reference indices used.
    """
    n, nref, dim = refs.shape
    out = np.zeros((n, slots, dim))
    count = np.zeros(n, dtype=int)
    used = np.full((n, slots), -1)
    for r in range(nref):
        v = refs[:, r].copy()
        # two projection passes keep orthogonality when v is nearly dependent
        for _ in range(2):
            for w, sign in fixed:
                v = v - (sign * _inner(gl, v, w))[:, None] * w
            for k in range(slots):
                w = out[:, k]
                v = v - _inner(gl, v, w)[:, None] * w
        norm2 = _inner(gl, v, v)
        norm = np.sqrt(np.clip(norm2, 0.0, None))
        take = (count < slots) & (norm > tol)
        rows = np.flatnonzero(take)
        out[rows, count[rows]] = v[rows] / norm[rows, None]
        used[rows, count[rows]] = r
        count[rows] += 1
    return out, count, used


def gram_schmidt_orthonormalize(seed: SeedData, tol: float = PIVOT_TOL) -> Frame:
    """Orthonormal frame for ``seed.g``.

    Dimension 4: ``e_4`` is the normalised seed (kept as the last row) and
    ``e_1..e_3`` come from the reference vectors projected onto its
    orthogonal complement.  A reference vector whose projection has norm
    below ``tol`` is skipped in favour of the next one.  Every vector is
    rescaled by a positive factor only; a warning is issued if the result
    is not positively oriented at some node.

    Raises:
        ValidationError: if the reference basis is exhausted at some point.
    """
    g = seed.g
    chart = g.chart
    dim = chart.dim
    if dim == 4 and seed.e4_seed is None:
        raise ValueError("dimension 4 needs a timelike seed e4")
    e4 = normalize_timelike(g, seed.e4_seed, check=True) if dim == 4 else None
    reference = seed.reference_basis
    if reference is None:
        reference = fields.constant_field(np.eye(dim), chart)
    slots = 3

    def func(points):
        pts = np.atleast_2d(points)
        gl = g.lower(pts)
        refs = np.asarray(reference(pts), dtype=float)
        fixed = []
        if e4 is not None:
            t = e4(pts)
            fixed = [(t, -1.0)]
        spatial, count, _ = _orthonormalize(gl, refs, fixed, slots, tol)
        if np.any(count < slots):
            k = int(np.flatnonzero(count < slots)[0])
            raise ValidationError("reference basis degenerates after projection",
                                  index=(k,), point=pts[k])
        if e4 is None:
            return spatial
        return np.concatenate([spatial, t[:, None, :]], axis=1)

    frame = Frame(func, chart)
    nodes = chart.nodes()
    dets = np.linalg.det(fields.evaluate_on_grid(frame, chart, nodes))
    if np.any(dets <= 0):
        k = int(np.flatnonzero(dets <= 0)[0])
        warnings.warn(
            f"Gram-Schmidt frame is negatively oriented at node {chart.index_of(k)}; "
            "orientation is left as produced",
            stacklevel=2,
        )
    return frame


def orthonormality_defect(frame: Frame, g: MetricField, nodes=None) -> np.ndarray:
    """Per-node ``max |g_ab e_j^a e_k^b - eta_jk|``."""
    chart = frame.chart
    nodes = chart.nodes() if nodes is None else np.atleast_2d(nodes)

    def defect(x):
        e = frame(x)
        gram = np.einsum("nja,nab,nkb->njk", e, g.lower(x), e)
        return np.abs(gram - eta(chart.dim)).max(axis=(-1, -2))

    return fields.evaluate_on_grid(defect, chart, nodes)


def check_orthonormal(frame: Frame, g: MetricField, tol: float = ORTHONORMAL_TOL,
                      nodes=None) -> float:
    """Raise :class:`ValidationError` at the first node where the frame is not
    orthonormal; return the largest defect."""
    on_grid = nodes is None
    nodes = frame.chart.nodes() if on_grid else np.atleast_2d(nodes)
    d = orthonormality_defect(frame, g, nodes)
    fields.raise_at(d <= tol, "frame is not orthonormal", frame.chart, nodes, on_grid=on_grid)
    return float(d.max())
