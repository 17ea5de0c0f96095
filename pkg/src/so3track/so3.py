"""Rotation algebra on SO(3).

Vectors are numpy arrays of shape (3,), matrices of shape (3, 3).  Rotations
are plain arrays as well; :func:`is_rotation` checks membership when needed.
Norms on matrices are Frobenius norms throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateInput, NonSkewInput, NonUnitAxis

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
I3 = np.eye(3)

ROTATION_TOL = 1e-9
SKEW_TOL = 1e-9
UNIT_TOL = 1e-9
# above this angle the axis is read off the symmetric part instead of dividing by sin(theta)
NEAR_PI = math.pi - 1e-4


def cross(v, w) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than np.cross for single vectors)."""
    return np.array([
        v[1] * w[2] - v[2] * w[1],
        v[2] * w[0] - v[0] * w[2],
        v[0] * w[1] - v[1] * w[0],
    ])


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix with ``hat(v) @ w == v x w``."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(m, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises:
        NonSkewInput: if the symmetric part of ``m`` exceeds ``tol`` (Frobenius).
    """
    m = np.asarray(m, dtype=float)
    if np.linalg.norm(m + m.T) > 2.0 * tol:
        raise NonSkewInput(f"matrix is not skew-symmetric: |m + m^T| = {np.linalg.norm(m + m.T):.3e}")
    return _vee(m)


def _vee(m) -> np.ndarray:
    # unchecked; callers guarantee skew-symmetry by construction
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_rodrigues(theta: float, axis) -> np.ndarray:
    """Rotation by ``theta`` about the unit vector ``axis``: I + sin(t) v^ + (1 - cos(t)) v^2."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if abs(n - 1.0) > UNIT_TOL:
        raise NonUnitAxis(f"axis must be a unit vector, got norm {n!r}")
    k = hat(axis)
    return I3 + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def exp_map(w) -> np.ndarray:
    """Rotation exp(w^) for an arbitrary rotation vector ``w``."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        return I3 + hat(w)
    return exp_rodrigues(theta, w / theta)


def rotation_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def is_rotation(m, tol: float = ROTATION_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    return bool(np.linalg.norm(m.T @ m - I3) <= tol and abs(np.linalg.det(m) - 1.0) <= tol)


def rotation_distance(r1, r2) -> float:
    """Frobenius distance ||r1 - r2||, which lies in [0, 2 sqrt 2] on SO(3)."""
    return float(np.linalg.norm(np.asarray(r1) - np.asarray(r2)))


def conjugacy_angle(x) -> float:
    """Rotation angle in [0, pi] of ``x``, i.e. the conjugacy class it belongs to."""
    c = (np.trace(x) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


@dataclass(frozen=True)
class ConjugacyDecomposition:
    """``x == u @ rotation_z(theta) @ u.T`` with ``theta`` in [0, pi]."""

    theta: float
    u: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.u @ rotation_z(self.theta) @ self.u.T

    @property
    def axis(self) -> np.ndarray:
        return self.u[:, 2]


def _frame_from_axis(u3: np.ndarray) -> np.ndarray:
    # u1: standard basis vector least aligned with u3, made orthogonal to it
    e = I3[int(np.argmin(np.abs(u3)))]
    u1 = e - np.dot(e, u3) * u3
    u1 /= np.linalg.norm(u1)
    u2 = cross(u3, u1)
    return np.column_stack((u1, u2, u3))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    for c in v:
        if abs(c) > 1e-12:
            return v if c > 0 else -v
    return v


def conjugacy_decompose(x) -> ConjugacyDecomposition:
    """Find (theta, U) with ``x = U Z_theta U^T``.

    The third column of U is the rotation axis of ``x``, oriented so that the
    rotation is by +theta about it.  U is not unique; the remaining columns
    follow a fixed convention so the output is deterministic.
    """
    x = np.asarray(x, dtype=float)
    skew = _vee(x - x.T) / 2.0  # = sin(theta) * axis
    s = np.linalg.norm(skew)
    c = (np.trace(x) - 1.0) / 2.0
    theta = math.atan2(s, min(1.0, max(-1.0, c)))

    if s < 1e-14 and c > 0.0:
        return ConjugacyDecomposition(0.0, I3.copy())

    if theta <= NEAR_PI:
        u3 = skew / s
        return ConjugacyDecomposition(theta, _frame_from_axis(u3))

    # near pi: the symmetric part is cos(theta) I + (1 - cos(theta)) u u^T
    sym = (x + x.T) / 2.0
    uu = (sym - c * I3) / (1.0 - c)
    j = int(np.argmax(np.diag(uu)))
    v = uu[:, j] / math.sqrt(uu[j, j])
    v /= np.linalg.norm(v)
    v = _canonical_sign(v)
    d_plus = np.linalg.norm(exp_rodrigues(theta, v) - x)
    d_minus = np.linalg.norm(exp_rodrigues(theta, -v) - x)
    if d_minus < d_plus - 1e-14:
        v = -v
    return ConjugacyDecomposition(theta, _frame_from_axis(v))


def attitude_error_vector(r, rd) -> np.ndarray:
    """e_R = (rd^T r - r^T rd)^vee / 2."""
    q = rd.T @ r
    return 0.5 * np.array([q[2, 1] - q[1, 2], q[0, 2] - q[2, 0], q[1, 0] - q[0, 1]])


def transport_matrix(r, rd) -> np.ndarray:
    """C(r^T rd) = (tr(r^T rd) I - r^T rd) / 2; maps e_Omega into the rate of e_R."""
    p = r.T @ rd
    return 0.5 * (np.trace(p) * I3 - p)


def project_so3(m) -> np.ndarray:
    """Nearest rotation to ``m`` in the Frobenius norm (orthogonal polar factor).

    Raises:
        DegenerateInput: if det(m) <= 0, where no proper polar factor exists.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)) or np.linalg.det(m) <= 0.0:
        raise DegenerateInput("cannot project a matrix with non-positive determinant onto SO(3)")
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation via a normalized random quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
