"""Equivalence of framings through the double covers
``SU(2) -> SO(3)`` and ``SL(2,C) -> SO+(3,1)``.

Two framings are related pointwise by a rotation (dimension 3) or a proper
orthochronous Lorentz transformation (dimension 4).  They are equivalent
when that relating map lifts to the cover.  On a box chart with periodic
axes the lift exists iff the relating map, lifted continuously along every
coordinate loop through the basepoint, closes up.  The sign recording
whether it closes (+1) or comes back negated (-1) is the holonomy sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import AmbiguousStepError, ValidationError
from .fields import Chart, Field
from .frames import check_orthonormal
from .symbols import PAULI, Frame, MetricField, adjugate, dagger, det2, eta

UNIT_TOL = 1e-12
ROTATION_TOL = 1e-8
CLOSURE_TOL = 1e-9
# consecutive lifts must overlap by at least cos(pi/4): relative angle < pi/2
STEP_OVERLAP = np.cos(np.pi / 4)
AMBIGUITY_TOL = 1e-9
DEFAULT_SAMPLES = 64
MAX_SAMPLES = 1024

SO3 = "SO(3)"
LORENTZ = "SO+(3,1)"


# ------------------------------------------------------ SU(2) -> SO(3)


def ad_su2_to_so3(q) -> np.ndarray:
    """Rotation matrix of ``v -> q v q^-1`` for a unit quaternion
    ``q = (w, x, y, z)``.  Accepts ``(..., 4)`` arrays."""
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q, axis=-1)
    if np.any(np.abs(norm - 1) > UNIT_TOL):
        raise ValueError(f"quaternion is not a unit quaternion (|q| = {np.max(norm)!r})")
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.stack([
        1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
    ], axis=-1)
    return m.reshape(q.shape[:-1] + (3, 3))


def quaternion_from_rotation(m) -> np.ndarray:
    """One of the two unit quaternions with ``ad(q) = m`` (Shepperd's
    method: branch on the largest diagonal combination)."""
    m = np.asarray(m, dtype=float)
    tr = np.trace(m)
    cand = np.array([tr, m[0, 0], m[1, 1], m[2, 2]])
    k = int(np.argmax(cand))
    if k == 0:
        w = 0.5 * np.sqrt(max(1 + tr, 0.0))
        q = [w, (m[2, 1] - m[1, 2]) / (4 * w), (m[0, 2] - m[2, 0]) / (4 * w),
             (m[1, 0] - m[0, 1]) / (4 * w)]
    elif k == 1:
        x = 0.5 * np.sqrt(max(1 + m[0, 0] - m[1, 1] - m[2, 2], 0.0))
        q = [(m[2, 1] - m[1, 2]) / (4 * x), x, (m[0, 1] + m[1, 0]) / (4 * x),
             (m[0, 2] + m[2, 0]) / (4 * x)]
    elif k == 2:
        y = 0.5 * np.sqrt(max(1 - m[0, 0] + m[1, 1] - m[2, 2], 0.0))
        q = [(m[0, 2] - m[2, 0]) / (4 * y), (m[0, 1] + m[1, 0]) / (4 * y), y,
             (m[1, 2] + m[2, 1]) / (4 * y)]
    else:
        z = 0.5 * np.sqrt(max(1 - m[0, 0] - m[1, 1] + m[2, 2], 0.0))
        q = [(m[1, 0] - m[0, 1]) / (4 * z), (m[0, 2] + m[2, 0]) / (4 * z),
             (m[1, 2] + m[2, 1]) / (4 * z), z]
    q = np.asarray(q)
    return q / np.linalg.norm(q)


def check_rotation(m, tol: float = ROTATION_TOL):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {m.shape}")
    defect = np.abs(m @ m.T - np.eye(3)).max()
    if defect > tol or abs(np.linalg.det(m) - 1) > tol:
        raise ValidationError(
            f"matrix is not a rotation (|m m^T - I| = {defect:.3g}, det = {np.linalg.det(m):.6g})"
        )


def so3_local_lift(m, near) -> np.ndarray:
    """The preimage ``+-q`` of the rotation ``m`` closest to ``near``.

    Raises:
        ValidationError: if ``m`` is not a rotation.
        AmbiguousStepError: if both preimages are equally close.
    """
    check_rotation(m)
    q = quaternion_from_rotation(m)
    overlap = float(np.dot(q, near))
    if abs(overlap) <= AMBIGUITY_TOL:
        raise AmbiguousStepError("both preimages are equidistant from the previous lift")
    return q if overlap > 0 else -q


def _quat_overlap(a, b):
    return float(np.dot(a, b))


# ------------------------------------------------- SL(2,C) -> SO+(3,1)


def ad_sl2c(S) -> np.ndarray:
    """Lorentz matrix of ``X -> S X S*`` on Hermitian ``X = s^j x_j``:
    ``Lambda_kj = (1/2) tr(s^k S s^j S*)``."""
    S = np.asarray(S, dtype=complex)
    act = S[..., None, :, :] @ PAULI @ dagger(S)[..., None, :, :]  # (..., j, 2, 2)
    return 0.5 * np.einsum("kab,...jba->...kj", PAULI, act).real


_W_CHOICES = PAULI[[3, 0, 1, 2]]


def sl2c_from_lorentz(lam) -> np.ndarray:
    """One of the two matrices ``+-S`` in ``SL(2,C)`` with ``ad(S) = lam``.

    Uses ``sum_k eta_kk (S s^k S*) W adj(s^k) = -2 tr(S* W) S``, valid for
    any fixed ``W``; the left side only needs ``lam``.  ``W`` is chosen
    among ``I, s^1, s^2, s^3`` to keep the normalisation well conditioned.
    """
    lam = np.asarray(lam, dtype=float)
    images = np.einsum("kj,kab->jab", lam, PAULI)  # S s^j S*
    signs = np.diag(eta(4))
    best, best_det = None, 0.0
    for W in _W_CHOICES:
        T = sum(signs[j] * images[j] @ W @ adjugate(PAULI[j]) for j in range(4))
        d = det2(T)
        if abs(d) > abs(best_det):
            best, best_det = T, d
    return best / np.sqrt(best_det)


def check_lorentz(lam, tol: float = ROTATION_TOL):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (4, 4):
        raise ValueError(f"Lorentz matrix must be 4x4, got {lam.shape}")
    e = eta(4)
    defect = np.abs(lam @ e @ lam.T - e).max() / max(1.0, np.abs(lam).max() ** 2)
    if defect > tol or abs(np.linalg.det(lam) - 1) > tol * max(1.0, np.abs(lam).max() ** 4):
        raise ValidationError(f"matrix is not a proper Lorentz transformation (defect {defect:.3g})")
    if lam[3, 3] <= 0:
        raise ValidationError("Lorentz transformation is not orthochronous")


def _spinor_overlap(a, b):
    """``Re tr(a^-1 b) / 2``; equals ``cos(theta/2)`` for a rotation by
    ``theta`` and ``cosh(phi/2)`` for a boost of rapidity ``phi``."""
    return float((np.trace(adjugate(a) @ b) / det2(a)).real / 2)


def lorentz_local_lift(lam, near) -> np.ndarray:
    """The preimage ``+-S`` of ``lam`` closest to ``near`` in ``SL(2,C)``."""
    check_lorentz(lam)
    S = sl2c_from_lorentz(lam)
    overlap = _spinor_overlap(near, S)
    if abs(overlap) <= AMBIGUITY_TOL:
        raise AmbiguousStepError("both preimages are equidistant from the previous lift")
    return S if overlap > 0 else -S


# ---------------------------------------------------------------- loops


@dataclass(frozen=True)
class RotationPath:
    """Samples of a closed loop in SO(3) or SO+(3,1)."""

    samples: np.ndarray  # (K + 1, d, d), first == last
    group: str
    loop: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", s)
        if self.group not in (SO3, LORENTZ):
            raise ValueError(f"unknown group {self.group!r}")
        if len(s) < 2:
            raise ValueError("a loop needs at least two samples")
        gap = np.abs(s[0] - s[-1]).max()
        if gap > CLOSURE_TOL * max(1.0, np.abs(s).max()):
            raise ValidationError(f"rotation path is not closed (first and last differ by {gap:.3g})")


@dataclass(frozen=True)
class HolonomySignature:
    signs: tuple[int, ...]

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"holonomy signs must be +1 or -1, got {self.signs}")

    def __mul__(self, other: "HolonomySignature") -> "HolonomySignature":
        return HolonomySignature(tuple(a * b for a, b in zip(self.signs, other.signs)))

    @property
    def trivial(self) -> bool:
        return all(s == 1 for s in self.signs)

    def __str__(self):
        return "(" + ",".join(f"{s:+d}" for s in self.signs) + ")"


def lift_loop(path: RotationPath, negate_initial: bool = False) -> int:
    """Lift ``path`` sample by sample, keeping the sheet continuous.

    Returns +1 if the lift closes and -1 if it ends at the negative of the
    initial lift.

    Raises:
        AmbiguousStepError: if two consecutive samples are at relative angle
            ``>= pi/2`` (the sheet choice would not be reliable).
    """
    if path.group == SO3:
        start = quaternion_from_rotation(path.samples[0])
        local_lift, overlap = so3_local_lift, _quat_overlap
    else:
        start = sl2c_from_lorentz(path.samples[0])
        local_lift, overlap = lorentz_local_lift, _spinor_overlap
    if negate_initial:
        start = -start
    current = start
    for k, m in enumerate(path.samples[1:], start=1):
        nxt = local_lift(m, current)
        if overlap(current, nxt) < STEP_OVERLAP:
            raise AmbiguousStepError(
                f"step {k} of loop {path.loop or '?'} turns by pi/2 or more; refine the sampling"
            )
        current = nxt
    return 1 if overlap(start, current) > 0 else -1


def loop_path(relating: Field, chart: Chart, axis: int, samples: int = DEFAULT_SAMPLES,
              basepoint=None) -> RotationPath:
    """Sample ``relating`` along the coordinate loop of periodic ``axis``
    (0-based) through ``basepoint`` (default: the ``lo`` corner)."""
    if not chart.periodic[axis]:
        raise ValueError(f"axis {axis + 1} is not periodic")
    base = chart.basepoint if basepoint is None else np.asarray(basepoint, dtype=float)
    t = np.arange(samples + 1) / samples
    pts = np.repeat(base[None, :], samples + 1, axis=0)
    pts[:, axis] = base[axis] + t * chart.width[axis]
    values = np.asarray(relating(chart.wrap(pts)), dtype=float)
    group = SO3 if chart.dim == 3 else LORENTZ
    return RotationPath(values, group, loop=f"x{axis + 1}")


def holonomy_sign(relating: Field, chart: Chart, axis: int, samples: int = DEFAULT_SAMPLES,
                  max_samples: int = MAX_SAMPLES, basepoint=None) -> tuple[int, int]:
    """Holonomy sign along one axis, doubling the sampling on ambiguity.

    Returns ``(sign, samples_used)``.
    """
    while True:
        try:
            return lift_loop(loop_path(relating, chart, axis, samples, basepoint)), samples
        except AmbiguousStepError:
            if samples * 2 > max_samples:
                raise
            samples *= 2


def holonomy_signature(relating: Field, chart: Chart, samples: int = DEFAULT_SAMPLES,
                       max_samples: int = MAX_SAMPLES) -> HolonomySignature:
    signs = [holonomy_sign(relating, chart, a, samples, max_samples)[0]
             for a in range(chart.dim) if chart.periodic[a]]
    return HolonomySignature(tuple(signs))


# ------------------------------------------------------------- framings


def relating_map(f1: Frame, f2: Frame, g: MetricField, tol: float = ROTATION_TOL,
                 check: bool = True) -> Field:
    """Pointwise ``Lambda`` with ``e2_k = Lambda_kj e1_j``.

    Raises:
        ValidationError: if a frame is not orthonormal for ``g``, or the
            frames have different charges (``Lambda`` outside the identity
            component).
    """
    chart = f1.chart
    if check:
        check_orthonormal(f1, g, tol)
        check_orthonormal(f2, g, tol)

    def lam(points):
        pts = np.atleast_2d(points)
        return np.linalg.solve(np.swapaxes(f1(pts), -1, -2), np.swapaxes(f2(pts), -1, -2)).swapaxes(-1, -2)

    if check:
        nodes = chart.nodes()
        L = fields.evaluate_on_grid(lam, chart, nodes)
        fields.raise_at(np.linalg.det(L) > 0,
                        "frames have different topological charges (relating map is improper)",
                        chart, nodes)
        if chart.dim == 4:
            fields.raise_at(L[:, 3, 3] > 0,
                            "frames have different temporal charges "
                            "(relating map is not orthochronous)", chart, nodes)
    return lam


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    signature: HolonomySignature
    samples: tuple[int, ...] = ()

    def __bool__(self):
        return self.equivalent


def framings_equivalent(f1: Frame, f2: Frame, g: MetricField, samples: int = DEFAULT_SAMPLES,
                        max_samples: int = MAX_SAMPLES) -> EquivalenceResult:
    """Equivalent iff the relating map has trivial holonomy on every
    periodic coordinate loop through the basepoint."""
    chart = f1.chart
    lam = relating_map(f1, f2, g)
    signs, used = [], []
    for a in range(chart.dim):
        if chart.periodic[a]:
            s, k = holonomy_sign(lam, chart, a, samples, max_samples)
            signs.append(s)
            used.append(k)
    sig = HolonomySignature(tuple(signs))
    return EquivalenceResult(sig.trivial, sig, tuple(used))


def classify_torus_framings(family, g: MetricField, reference: Frame | None = None,
                            samples: int = DEFAULT_SAMPLES) -> list[HolonomySignature]:
    """Holonomy signature of every framing relative to ``reference``
    (default: the first one).  Equal signatures mean equivalent framings."""
    if not family:
        return []
    chart = family[0].chart
    if not all(chart.periodic):
        raise ValueError("classification needs a fully periodic chart")
    ref = family[0] if reference is None else reference
    return [framings_equivalent(ref, f, g, samples).signature for f in family]


def rotation_z(theta) -> np.ndarray:
    """Rotations by ``theta`` about the third axis, shape ``(..., 3, 3)``."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    z, o = np.zeros_like(theta), np.ones_like(theta)
    return np.stack([c, -s, z, s, c, z, z, z, o], axis=-1).reshape(theta.shape + (3, 3))


def twisted_frame(frame: Frame, angle: Field) -> Frame:
    """Rotate the spatial legs ``e_1, e_2`` of ``frame`` by ``angle(x)``
    about ``e_3``: ``e'_k = Rz(angle)_kj e_j``."""
    dim = frame.dim

    def func(points):
        pts = np.atleast_2d(points)
        rot = np.tile(np.eye(dim), (len(pts), 1, 1))
        rot[:, :3, :3] = rotation_z(np.asarray(angle(pts), dtype=float))
        return rot @ frame(pts)

    return Frame(func, frame.chart)
