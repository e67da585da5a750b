"""Geodesic and MSE rotation losses on 6D outputs, with analytic gradients."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from headpose6d.so3 import as_matrix, gs_map, gs_map_vjp

#: acos arguments this close to +-1 get a zero gradient (minimum and cut locus).
ACOS_BOUNDARY = 1e-7


class LossResult(NamedTuple):
    value: float
    grad: np.ndarray  # d value / d 6D input, shape (6,)


def _cos_angle(rp, rgt):
    # tr(Rp Rgt^T) as an elementwise sum keeps d(A, B) == d(B, A) bit-exact
    return (np.sum(rp * rgt, axis=(-2, -1)) - 1.0) / 2.0


def geodesic_distance(rp, rgt):
    """Angle in radians between two rotations, ``acos((tr(Rp Rgt^T) - 1) / 2)``.

    The argument is clamped to [-1, 1]. Accepts stacks ``(..., 3, 3)``.
    """
    c = np.clip(_cos_angle(as_matrix(rp), as_matrix(rgt)), -1.0, 1.0)
    d = np.arccos(c)
    return float(d) if np.ndim(d) == 0 else d


def geodesic_matrix_grad(rp, rgt):
    """Geodesic distance and its gradient w.r.t. the entries of ``rp``.

    Returns ``(value, grad)``; batched inputs give arrays. The gradient is
    zero where the acos argument is within ``ACOS_BOUNDARY`` of +-1.
    """
    rp, rgt = as_matrix(rp), as_matrix(rgt)
    c = _cos_angle(rp, rgt)
    value = np.arccos(np.clip(c, -1.0, 1.0))
    inside = np.abs(c) < 1.0 - ACOS_BOUNDARY
    safe = np.where(inside, c, 0.0)
    dval_dc = np.where(inside, -1.0 / np.sqrt(1.0 - safe * safe), 0.0)
    grad = (0.5 * dval_dc)[..., None, None] * rgt
    return value, grad


def mse_matrix_grad(rp, rgt):
    """Mean of the 9 squared entry differences and its gradient w.r.t. ``rp``."""
    diff = as_matrix(rp) - as_matrix(rgt)
    return np.mean(diff * diff, axis=(-2, -1)), diff * (2.0 / 9.0)


def geodesic_loss_6d(s, rgt) -> LossResult:
    """Geodesic distance between ``gs_map(s)`` and ``rgt`` plus d/ds."""
    s = np.asarray(s, dtype=float)
    value, g = geodesic_matrix_grad(gs_map(s), rgt)
    return LossResult(float(value), gs_map_vjp(s, g))


def mse_loss_6d(s, rgt) -> LossResult:
    s = np.asarray(s, dtype=float)
    value, g = mse_matrix_grad(gs_map(s), rgt)
    return LossResult(float(value), gs_map_vjp(s, g))


def combined_loss_6d(s, rgt, weight_mse=1.0) -> LossResult:
    """``geodesic + weight_mse * mse``; gradients add the same way."""
    geo = geodesic_loss_6d(s, rgt)
    if weight_mse == 0:
        return geo
    mse = mse_loss_6d(s, rgt)
    return LossResult(geo.value + weight_mse * mse.value, geo.grad + weight_mse * mse.grad)

