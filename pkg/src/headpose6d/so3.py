"""Rotation representations and conversions between them.

Rotation matrices are the canonical internal form. Every other
representation converts to and from a 3x3 matrix:

* 6D: the first two matrix columns ``(a1, a2)`` stored flat as
  ``[a1x, a1y, a1z, a2x, a2y, a2z]``. ``gs_drop`` produces it and
  ``gs_map`` maps any non-degenerate 6-vector back onto SO(3) with
  Gram-Schmidt.
* Euler angles: ``(yaw, pitch, roll)`` in degrees, under the single
  convention documented at :data:`EULER_CONVENTION`.
* Unit quaternions ``(w, x, y, z)``; ``q`` and ``-q`` are the same rotation.
* Axis-angle: unit axis and angle in radians.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from headpose6d.errors import DegenerateInput

#: Tolerance below which ``|a1|`` or the orthogonalised ``|u2|`` is degenerate.
DEGENERACY_EPS = 1e-9

#: Tolerance used by :func:`is_rotation`.
ORTHO_TOL = 1e-9

#: Euler convention. With yaw, pitch and roll in radians::
#:
#:     R = Rx(-roll) @ Ry(-pitch) @ Rz(-yaw)
#:
#: i.e. R is the transpose of the intrinsic z-y'-x'' product
#: ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``. Pitch is the middle angle, so gimbal
#: lock happens at pitch = +-90 degrees. This is the only one of the 24
#: axis-order/intrinsic/extrinsic conventions (with or without transpose)
#: that reproduces the left sample of the ambiguity pair in
#: :mod:`headpose6d.samples` to within 5e-3 per entry.
EULER_CONVENTION = "R = Rx(-roll) @ Ry(-pitch) @ Rz(-yaw)"

# cos(pitch) below this is treated as gimbal lock by matrix_to_euler
_GIMBAL_EPS = 1e-9


class EulerAngles(NamedTuple):
    """Yaw, pitch and roll in degrees."""

    yaw: float
    pitch: float
    roll: float


class UnitQuaternion(NamedTuple):
    w: float
    x: float
    y: float
    z: float

    def __neg__(self):
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z)

    def as_array(self):
        return np.array(self, dtype=float)

    def same_rotation(self, other, tol=1e-9):
        """True if ``self`` and ``other`` describe the same rotation (sign-blind)."""
        return abs(abs(float(np.dot(self.as_array(), np.asarray(other, float)))) - 1.0) <= tol


class AxisAngle(NamedTuple):
    """Unit rotation axis and angle in radians."""

    axis: tuple
    angle: float


# ---------------------------------------------------------------------------
# basic helpers


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"expected a (..., 3, 3) array, got shape {m.shape}")
    return m


def orthogonality_error(m) -> float:
    """Largest absolute entry of ``R @ R.T - I``."""
    m = as_matrix(m)
    return float(np.max(np.abs(m @ np.swapaxes(m, -1, -2) - np.eye(3))))


def is_rotation(m, tol=ORTHO_TOL) -> bool:
    m = as_matrix(m)
    if not np.all(np.isfinite(m)):
        return False
    return orthogonality_error(m) <= tol and bool(np.all(np.abs(np.linalg.det(m) - 1.0) <= tol))


def rot_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_map(rotvec) -> np.ndarray:
    """Rotation matrix for a rotation vector (axis times angle, radians)."""
    rotvec = np.asarray(rotvec, dtype=float)
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-15:
        return np.eye(3)
    return axis_angle_to_matrix(AxisAngle(tuple(rotvec / angle), angle))


def rotation_angle(m) -> float:
    """Rotation angle of ``m`` in [0, pi] radians.

    Uses ``atan2(sin, cos)`` of the angle, which stays accurate near 0 and
    pi where ``acos`` of the trace loses about half the significant digits.
    """
    m = as_matrix(m)
    cos = (np.trace(m) - 1.0) / 2.0
    sin = 0.5 * math.sqrt((m[2, 1] - m[1, 2]) ** 2 + (m[0, 2] - m[2, 0]) ** 2 + (m[1, 0] - m[0, 1]) ** 2)
    return math.atan2(sin, cos)


def relative_angle(a, b) -> float:
    """Angle in radians of the relative rotation ``a @ b.T``."""
    return rotation_angle(as_matrix(a) @ as_matrix(b).T)


# ---------------------------------------------------------------------------
# 6D representation


def gs_drop(m) -> np.ndarray:
    """Drop the third column: returns the flat 6-vector ``[a1, a2]``.

    Works on a single matrix or on a stack of shape ``(..., 3, 3)``.
    """
    m = as_matrix(m)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def _cross(u, v):
    # np.cross spends most of its time on axis bookkeeping for 3-vectors
    u0, u1, u2 = u[..., 0], u[..., 1], u[..., 2]
    v0, v1, v2 = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([u1 * v2 - u2 * v1, u2 * v0 - u0 * v2, u0 * v1 - u1 * v0], axis=-1)


def _gs_columns(s):
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != 6:
        raise ValueError(f"expected a (..., 6) array, got shape {s.shape}")
    a1, a2 = s[..., :3], s[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 <= DEGENERACY_EPS):
        raise DegenerateInput("first 6D column has (near) zero norm")
    b1 = a1 / n1
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 <= DEGENERACY_EPS):
        raise DegenerateInput("6D columns are (numerically) parallel")
    b2 = u2 / n2
    b3 = _cross(b1, b2)
    return a1, a2, n1, n2, b1, b2, b3


def gs_map(s) -> np.ndarray:
    """Map a 6D vector (or a stack of them) onto SO(3) by Gram-Schmidt.

    ``b1 = a1/|a1|``, ``b2`` is ``a2`` with its ``b1`` component removed and
    normalised, ``b3 = b1 x b2``. Raises :class:`DegenerateInput` if
    ``|a1|`` or the orthogonalised ``|u2|`` is at most ``DEGENERACY_EPS``.
    """
    *_, b1, b2, b3 = _gs_columns(s)
    return np.stack([b1, b2, b3], axis=-1)


def gs_map_vjp(s, grad_m) -> np.ndarray:
    """Pull a gradient w.r.t. ``gs_map(s)`` back to a gradient w.r.t. ``s``.

    ``grad_m`` has the shape of ``gs_map(s)``; the result has the shape of ``s``.
    """
    _, a2, n1, n2, b1, b2, _ = _gs_columns(s)
    grad_m = np.asarray(grad_m, dtype=float)
    g1, g2, g3 = grad_m[..., :, 0], grad_m[..., :, 1], grad_m[..., :, 2]

    def dot(u, v):
        return np.sum(u * v, axis=-1, keepdims=True)

    # b3 = b1 x b2
    g1 = g1 + _cross(b2, g3)
    g2 = g2 + _cross(g3, b1)
    # b2 = u2 / |u2|
    gu2 = (g2 - b2 * dot(b2, g2)) / n2
    # u2 = a2 - (b1 . a2) b1
    ga2 = gu2 - b1 * dot(b1, gu2)
    g1 = g1 - dot(b1, a2) * gu2 - dot(b1, gu2) * a2
    # b1 = a1 / |a1|
    ga1 = (g1 - b1 * dot(b1, g1)) / n1
    return np.concatenate([ga1, ga2], axis=-1)


# ---------------------------------------------------------------------------
# Euler angles


def _euler_radians(e):
    yaw, pitch, roll = (float(v) for v in e)
    return math.radians(yaw), math.radians(pitch), math.radians(roll)


def euler_to_matrix(e) -> np.ndarray:
    """Rotation matrix for ``(yaw, pitch, roll)`` in degrees.

    See :data:`EULER_CONVENTION`.
    """
    yaw, pitch, roll = _euler_radians(e)
    return rot_x(-roll) @ rot_y(-pitch) @ rot_z(-yaw)


def _wrap_degrees(angle):
    # canonical range (-180, 180]
    angle = math.remainder(angle, 360.0)
    if angle <= -180.0:
        angle += 360.0
    return angle + 0.0


def wrap_degrees(angle):
    """Reduce an angle in degrees (scalar or array) to (-180, 180]."""
    if np.ndim(angle) == 0:
        return _wrap_degrees(float(angle))
    a = np.remainder(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(a <= -180.0, a + 360.0, a)


def matrix_to_euler(m) -> EulerAngles:
    """Canonical ``(yaw, pitch, roll)`` in degrees for a rotation matrix.

    Pitch lies in [-90, 90]; yaw and roll in (-180, 180]. At gimbal lock
    (cos(pitch) below 1e-9) roll is set to 0 and yaw absorbs the free
    rotation.
    """
    r = as_matrix(m)
    # r.T is Rz(yaw) Ry(pitch) Rx(roll)
    cos_pitch = math.hypot(r[0, 0], r[0, 1])
    pitch = math.atan2(-r[0, 2], cos_pitch)
    if cos_pitch > _GIMBAL_EPS:
        yaw = math.atan2(r[0, 1], r[0, 0])
        roll = math.atan2(r[1, 2], r[2, 2])
    else:
        yaw = math.atan2(-r[1, 0], r[1, 1])
        roll = 0.0
    return EulerAngles(
        _wrap_degrees(math.degrees(yaw)),
        math.degrees(pitch) + 0.0,
        _wrap_degrees(math.degrees(roll)),
    )


# ---------------------------------------------------------------------------
# quaternions


def canonical_quat(q) -> UnitQuaternion:
    """Normalise ``q`` and pick the sign with ``w >= 0``.

    When ``w == 0`` the first nonzero of ``(x, y, z)`` is made positive.
    Negative zeros are cleared so serialised output is stable.
    """
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if not n > 0.0 or not math.isfinite(n):
        raise ValueError("quaternion must have a finite nonzero norm")
    q = q / n
    for v in q:
        if v != 0.0:
            if v < 0.0:
                q = -q
            break
    return UnitQuaternion(*(float(v) + 0.0 for v in q))


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a quaternion ``(w, x, y, z)``; also accepts ``(..., 4)``.

    The input is normalised first. ``q`` and ``-q`` give bit-identical
    matrices since every entry is a sum of pairwise products.
    """
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def matrix_to_quat(m) -> UnitQuaternion:
    """Canonical quaternion of a rotation matrix (largest-pivot extraction)."""
    r = as_matrix(m)
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    pivots = (tr, r[0, 0], r[1, 1], r[2, 2])
    k = int(np.argmax(pivots))
    if k == 0:
        s = 2.0 * math.sqrt(max(1.0 + tr, 0.0))
        q = (0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s)
    elif k == 1:
        s = 2.0 * math.sqrt(max(1.0 + r[0, 0] - r[1, 1] - r[2, 2], 0.0))
        q = ((r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s)
    elif k == 2:
        s = 2.0 * math.sqrt(max(1.0 - r[0, 0] + r[1, 1] - r[2, 2], 0.0))
        q = ((r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(max(1.0 - r[0, 0] - r[1, 1] + r[2, 2], 0.0))
        q = ((r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s)
    return canonical_quat(q)


# ---------------------------------------------------------------------------
# axis-angle


def axis_angle_to_quat(aa) -> UnitQuaternion:
    axis, angle = aa
    x, y, z = (float(v) for v in axis)
    half = 0.5 * float(angle)
    s = math.sin(half)
    return canonical_quat((math.cos(half), x * s, y * s, z * s))


def quat_to_axis_angle(q) -> AxisAngle:
    """Axis-angle with angle in [0, pi]; identity gets the axis (1, 0, 0)."""
    w, x, y, z = canonical_quat(q)
    vnorm = math.sqrt(x * x + y * y + z * z)
    if vnorm < 1e-15:
        return AxisAngle((1.0, 0.0, 0.0), 0.0)
    angle = 2.0 * math.atan2(vnorm, w)
    return AxisAngle((x / vnorm, y / vnorm, z / vnorm), angle)


def axis_angle_to_matrix(aa) -> np.ndarray:
    return quat_to_matrix(axis_angle_to_quat(aa))


def matrix_to_axis_angle(m) -> AxisAngle:
    return quat_to_axis_angle(matrix_to_quat(m))


# ---------------------------------------------------------------------------
# sampling


def random_quat(rng: np.random.Generator) -> UnitQuaternion:
    """Uniform unit quaternion (normalised 4D Gaussian)."""
    while True:
        q = rng.standard_normal(4)
        if np.linalg.norm(q) > 1e-6:
            return canonical_quat(q)


def random_rotation(rng) -> np.ndarray:
    """Rotation matrix drawn uniformly (Haar measure) from SO(3).

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return quat_to_matrix(random_quat(rng))


def random_rotations(rng, n) -> np.ndarray:
    """Stack of ``n`` uniform rotations, shape ``(n, 3, 3)``."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    q = rng.standard_normal((n, 4))
    return quat_to_matrix(q)
