"""Random smooth periodic test objects shared by the test modules."""

import numpy as np

from spinsym.csub import Potential
from spinsym.gauge import GaugeMap, Group
from spinsym.symbols import PAULI, Frame

TWO_PI = 2 * np.pi


def _modes(rng, dim, count):
    # unit wave vectors along single axes
    k = np.zeros((count, dim), dtype=int)
    k[np.arange(count), rng.integers(0, dim, size=count)] = rng.choice([-1, 1], size=count)
    return k, rng.uniform(0, TWO_PI, size=count)


def smooth_coefficients(rng, chart, shape, amp, count=2):
    """A field ``x -> sum_m B_m sin(2 pi k_m.x + phi_m)`` with values of
    ``shape``; periodic with period one on every axis."""
    k, phase = _modes(rng, chart.dim, count)
    B = rng.normal(size=(count,) + tuple(shape)) * amp
    lo = chart.basepoint
    w = chart.width

    def f(points):
        pts = np.atleast_2d(points)
        arg = TWO_PI * ((pts - lo) / w) @ k.T + phase  # (N, count)
        return np.tensordot(np.sin(arg), B, axes=([1], [0]))

    return f


def random_frame(rng, chart, amp=0.08, base_noise=0.15, flip=False):
    """Near-identity curved frame: non-degenerate, with ``dx^4`` timelike
    in dimension 4.  ``flip`` exchanges ``e_1`` and ``e_2``."""
    dim = chart.dim
    M0 = np.eye(dim) + base_noise * rng.normal(size=(dim, dim))
    wiggle = smooth_coefficients(rng, chart, (dim, dim), amp)
    perm = np.arange(dim)
    if flip:
        perm[[0, 1]] = perm[[1, 0]]

    def func(points):
        pts = np.atleast_2d(points)
        return (M0 + wiggle(pts))[:, perm]

    return Frame(func, chart)


def random_generic_frame(rng, chart, amp=0.1):
    """Constant random Gaussian matrix (either orientation) plus a smooth
    perturbation; not tied to any particular time direction."""
    dim = chart.dim
    while True:
        M0 = rng.normal(size=(dim, dim))
        s = np.linalg.svd(M0, compute_uv=False)
        if s[-1] > 0.5:
            break
    wiggle = smooth_coefficients(rng, chart, (dim, dim), amp * s[-1] / dim)
    return Frame(lambda x: M0 + wiggle(np.atleast_2d(x)), chart)


def expm_tracefree(A):
    """``exp(A)`` for trace-free 2x2 ``A``: ``cosh(mu) I + sinh(mu)/mu A``
    with ``mu^2 = -det A``."""
    mu2 = -(A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0])
    mu = np.sqrt(mu2.astype(complex))
    small = np.abs(mu) < 1e-8
    safe = np.where(small, 1.0, mu)
    sinhc = np.where(small, 1 + mu2 / 6, np.sinh(safe) / safe)
    return np.cosh(mu)[..., None, None] * np.eye(2) + sinhc[..., None, None] * A


def random_gauge(rng, chart, group=Group.SL2C, amp=0.12):
    """Smooth periodic determinant-one field ``exp(sum c_k s^k)``;
    ``c_k`` imaginary for SU2.

    The default amplitude keeps the O(h^2) truncation of the transformed
    pipeline near 3e-9, inside the 1e-8 Hermiticity / realness checks.
    """
    re = smooth_coefficients(rng, chart, (3,), amp)
    im = smooth_coefficients(rng, chart, (3,), amp)

    def R(points):
        pts = np.atleast_2d(points)
        if group is Group.SU2:
            c = 1j * re(pts)
        else:
            c = re(pts) + 1j * im(pts)
        return expm_tracefree(np.einsum("nk,kij->nij", c, PAULI[:3]))

    return GaugeMap(R, group, chart)


def random_potential(rng, chart, amp=0.3):
    f = smooth_coefficients(rng, chart, (chart.dim,), amp)
    return Potential(lambda x: f(np.atleast_2d(x)), chart)


def random_hermitian_coefficients(rng, n, dim, trace_free=False):
    X = rng.normal(size=(n, dim, 2, 2)) + 1j * rng.normal(size=(n, dim, 2, 2))
    H = 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))
    if trace_free:
        H = H - 0.5 * np.trace(H, axis1=-2, axis2=-1)[..., None, None] * np.eye(2)
    return H


def boosted_seed_case(rng, chart, rapidity=None):
    """Metric of a random curved tetrad together with an ``e_4`` seed boosted
    away from that tetrad's timelike leg (timelike by construction)."""
    from spinsym.symbols import frame_to_symbol, metric_from_symbol

    frame = random_frame(rng, chart)
    g = metric_from_symbol(frame_to_symbol(frame))
    b = rng.uniform(0.3, 1.5) if rapidity is None else rapidity
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)

    def seed(points):
        e = frame(np.atleast_2d(points))
        return np.sinh(b) * np.einsum("j,nja->na", n, e[:, :3]) + np.cosh(b) * e[:, 3]

    return g, seed
