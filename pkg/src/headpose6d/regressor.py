"""A small numpy MLP that regresses rotations through different output heads.

The network maps a noisy 9-value encoding of a rotation back to that
rotation. Its output is read through one of three heads:

========  =====  ==========================================================
head      width  to rotation matrix
========  =====  ==========================================================
sixd      6      Gram-Schmidt (``gs_map``)
euler     3      yaw/pitch/roll in radians through the frozen Euler convention
quat      4      normalised (norm floored at 1e-12), then ``quat_to_matrix``
========  =====  ==========================================================

Loss compatibility (every pair is allowed):

========  ======================  ===========================================
head      loss=geodesic           loss=mse
========  ======================  ===========================================
sixd      geodesic on matrix      mean squared matrix-entry error
euler     geodesic on matrix      wrapped squared angle error (radians)
quat      geodesic on matrix      mean squared matrix-entry error
========  ======================  ===========================================

``loss=combined`` is ``geodesic + weight_mse * mse`` with the head's mse.
Backpropagation is written out by hand; ``tests/test_regressor.py`` checks
it against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from headpose6d.errors import ConfigError
from headpose6d.losses import geodesic_matrix_grad, mse_matrix_grad
from headpose6d.so3 import (
    DEGENERACY_EPS,
    euler_to_matrix,
    gs_map,
    gs_map_vjp,
    matrix_to_euler,
    quat_to_matrix,
)

HEAD_WIDTH = {"sixd": 6, "euler": 3, "quat": 4}
LOSSES = ("geodesic", "mse", "combined")
YAW_RANGES = {"narrow": 99.0, "full": 180.0}
PITCH_ROLL_RANGE = 99.0
QUAT_NORM_FLOOR = 1e-12

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    head: str = "sixd"
    loss: str = "geodesic"
    weight_mse: float = 1.0
    hidden: Sequence[int] = (64, 64)

    def validate(self):
        if self.head not in HEAD_WIDTH:
            raise ConfigError(f"unknown head {self.head!r}, expected one of {sorted(HEAD_WIDTH)}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}, expected one of {list(LOSSES)}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.learning_rate >= 0 or not math.isfinite(self.learning_rate):
            raise ConfigError("learning_rate must be finite and non-negative")
        if not self.weight_mse >= 0:
            raise ConfigError("weight_mse must be non-negative")
        if not self.hidden or any(int(w) < 1 for w in self.hidden):
            raise ConfigError("hidden widths must be positive")
        return self


@dataclass
class SyntheticTask:
    """Noisy matrix-entry inputs paired with their clean target rotations.

    Yaw is uniform in +-99 degrees (``narrow``) or +-180 (``full``); pitch
    and roll are uniform in +-99 degrees.
    """

    n_samples: int = 2000
    noise: float = 0.05
    yaw_range: str = "narrow"
    seed: int = 0
    holdout_fraction: float = 0.1

    def generate(self):
        """``(inputs, targets)`` with shapes ``(n, 9)`` and ``(n, 3, 3)``."""
        if self.yaw_range not in YAW_RANGES:
            raise ConfigError(f"unknown yaw range {self.yaw_range!r}")
        rng = np.random.default_rng(self.seed)
        yaw_max = YAW_RANGES[self.yaw_range]
        yaw = rng.uniform(-yaw_max, yaw_max, self.n_samples)
        pitch = rng.uniform(-PITCH_ROLL_RANGE, PITCH_ROLL_RANGE, self.n_samples)
        roll = rng.uniform(-PITCH_ROLL_RANGE, PITCH_ROLL_RANGE, self.n_samples)
        targets = np.stack([euler_to_matrix(e) for e in zip(yaw, pitch, roll)])
        inputs = targets.reshape(-1, 9) + self.noise * rng.standard_normal((self.n_samples, 9))
        return inputs, targets

    def split(self):
        """Deterministic train/held-out split: ``(x_train, r_train, x_test, r_test)``."""
        inputs, targets = self.generate()
        order = np.random.default_rng([self.seed, 1]).permutation(self.n_samples)
        n_test = max(1, int(round(self.holdout_fraction * self.n_samples)))
        test, train = order[:n_test], order[n_test:]
        return inputs[train], targets[train], inputs[test], targets[test]


# ---------------------------------------------------------------------------
# network


class MLP:
    """Fully connected network, tanh on hidden layers, linear output."""

    def __init__(self, weights, biases):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]

    @classmethod
    def init(cls, widths, rng):
        """Uniform ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` weights and biases."""
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, fan_out))
        return cls(weights, biases)

    @property
    def widths(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self):
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x, keep=False):
        """Raw outputs for a ``(batch, in)`` or ``(in,)`` input.

        With ``keep`` the layer activations are returned too, for :meth:`backward`.
        """
        h = np.asarray(x, dtype=float)
        acts = [h]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = np.tanh(h)
            acts.append(h)
        return (h, acts) if keep else h

    def backward(self, acts, grad_out):
        """Parameter gradients, ordered like :meth:`params`."""
        g = np.asarray(grad_out, dtype=float)
        gw, gb = [None] * len(self.weights), [None] * len(self.weights)
        for k in range(len(self.weights) - 1, -1, -1):
            if k < len(self.weights) - 1:
                g = g * (1.0 - acts[k + 1] ** 2)
            a = acts[k]
            if a.ndim == 1:
                gw[k] = np.outer(a, g)
                gb[k] = g.copy()
            else:
                gw[k] = a.T @ g
                gb[k] = g.sum(axis=0)
            g = g @ self.weights[k].T
        return [*gw, *gb]


def forward(mlp: MLP, x, head="sixd"):
    """Head output for one input: 6D vector, Euler angles (radians) or unit quaternion."""
    out = mlp.forward(x)
    if head == "quat":
        return out / max(float(np.linalg.norm(out)), QUAT_NORM_FLOOR)
    return out


# ---------------------------------------------------------------------------
# heads: raw output -> rotation matrix, and the matching vector-Jacobian product


def _elementary(axis, angles):
    """Batched elementary rotations about ``axis`` and their angle derivatives."""
    c, s = np.cos(angles), np.sin(angles)
    i, j = {"x": (1, 2), "y": (2, 0), "z": (0, 1)}[axis]
    k = 3 - i - j
    m = np.zeros(angles.shape + (3, 3))
    d = np.zeros_like(m)
    m[..., k, k] = 1.0
    m[..., i, i] = m[..., j, j] = c
    m[..., i, j], m[..., j, i] = -s, s
    d[..., i, i] = d[..., j, j] = -s
    d[..., i, j], d[..., j, i] = -c, c
    return m, d


def euler_rad_to_matrices(angles):
    """``(n, 3)`` yaw/pitch/roll in radians to ``(n, 3, 3)`` matrices (frozen convention)."""
    angles = np.atleast_2d(angles)
    rx, _ = _elementary("x", -angles[:, 2])
    ry, _ = _elementary("y", -angles[:, 1])
    rz, _ = _elementary("z", -angles[:, 0])
    return rx @ ry @ rz


def _euler_vjp(angles, grad_m):
    rx, dx = _elementary("x", -angles[:, 2])
    ry, dy = _elementary("y", -angles[:, 1])
    rz, dz = _elementary("z", -angles[:, 0])
    # the minus signs come from the negated angles in the convention
    d_yaw = -(rx @ ry @ dz)
    d_pitch = -(rx @ dy @ rz)
    d_roll = -(dx @ ry @ rz)
    return np.stack([np.sum(grad_m * d, axis=(-2, -1)) for d in (d_yaw, d_pitch, d_roll)], axis=-1)


def _quat_vjp(q, grad_m):
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    g = grad_m
    gw = 2 * (-z * g[:, 0, 1] + y * g[:, 0, 2] + z * g[:, 1, 0] - x * g[:, 1, 2] - y * g[:, 2, 0] + x * g[:, 2, 1])
    gx = 2 * (y * g[:, 0, 1] + z * g[:, 0, 2] + y * g[:, 1, 0] - 2 * x * g[:, 1, 1] - w * g[:, 1, 2]
              + z * g[:, 2, 0] + w * g[:, 2, 1] - 2 * x * g[:, 2, 2])
    gy = 2 * (-2 * y * g[:, 0, 0] + x * g[:, 0, 1] + w * g[:, 0, 2] + x * g[:, 1, 0] + z * g[:, 1, 2]
              - w * g[:, 2, 0] + z * g[:, 2, 1] - 2 * y * g[:, 2, 2])
    gz = 2 * (-2 * z * g[:, 0, 0] - w * g[:, 0, 1] + x * g[:, 0, 2] + w * g[:, 1, 0] - 2 * z * g[:, 1, 1]
              + y * g[:, 1, 2] + x * g[:, 2, 0] + y * g[:, 2, 1])
    return np.stack([gw, gx, gy, gz], axis=-1)


def _quat_parts(out):
    norm = np.maximum(np.linalg.norm(out, axis=-1, keepdims=True), QUAT_NORM_FLOOR)
    return out / norm, norm


def head_to_matrices(head, out):
    """Rotation matrices for a batch of raw outputs ``(n, width)``."""
    out = np.atleast_2d(out)
    if head == "sixd":
        return gs_map(out)
    if head == "euler":
        return euler_rad_to_matrices(out)
    q, _ = _quat_parts(out)
    return quat_to_matrix(q)


def head_vjp(head, out, grad_m):
    """Pull ``d loss / d matrices`` back to ``d loss / d raw outputs``."""
    if head == "sixd":
        return gs_map_vjp(out, grad_m)
    if head == "euler":
        return _euler_vjp(out, grad_m)
    q, norm = _quat_parts(out)
    gq = _quat_vjp(q, grad_m)
    return (gq - q * np.sum(q * gq, axis=-1, keepdims=True)) / norm


def _wrap_rad(a):
    return a - 2.0 * np.pi * np.floor((a + np.pi) / (2.0 * np.pi))


def batch_loss(head, loss, out, targets, target_angles=None, weight_mse=1.0, need_grad=True):
    """Mean loss over a batch, its gradient w.r.t. ``out`` and per-sample geodesic errors.

    ``target_angles`` (radians) is only read for the Euler head's mse term.
    With ``need_grad=False`` the gradient slot is None.
    """
    out = np.atleast_2d(out)
    n = len(out)
    rp = head_to_matrices(head, out)
    geo, geo_grad = geodesic_matrix_grad(rp, targets)
    total = np.zeros(n)
    grad_m = np.zeros_like(rp)
    grad_out = np.zeros_like(out)
    if loss in ("geodesic", "combined"):
        total += geo
        grad_m += geo_grad
    mse_weight = 1.0 if loss == "mse" else (weight_mse if loss == "combined" else 0.0)
    if mse_weight:
        if head == "euler":
            diff = _wrap_rad(out - target_angles)
            total += mse_weight * np.mean(diff * diff, axis=-1)
            grad_out += mse_weight * diff * (2.0 / 3.0)
        else:
            mse, mse_grad = mse_matrix_grad(rp, targets)
            total += mse_weight * mse
            grad_m += mse_weight * mse_grad
    if not need_grad:
        return float(total.mean()), None, geo
    grad_out = (grad_out + head_vjp(head, out, grad_m)) / n
    return float(total.mean()), grad_out, geo


# ---------------------------------------------------------------------------
# training


class Adam:
    def __init__(self, params, lr, betas=ADAM_BETAS, eps=ADAM_EPS):
        self.lr, self.betas, self.eps = lr, betas, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        b1, b2 = self.betas
        self.t += 1
        c1, c2 = 1.0 - b1 ** self.t, 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def predict_matrices(mlp, head, inputs):
    """Predicted rotations and the number of degenerate 6D outputs.

    Degenerate 6D rows (no orientation information) are replaced by the
    identity so that a report can still be produced; they are counted.
    """
    out = mlp.forward(np.atleast_2d(inputs))
    if head != "sixd":
        return head_to_matrices(head, out), 0
    n1 = np.linalg.norm(out[:, :3], axis=-1)
    safe_b1 = out[:, :3] / np.maximum(n1, DEGENERACY_EPS)[:, None]
    u2 = out[:, 3:] - np.sum(safe_b1 * out[:, 3:], axis=-1, keepdims=True) * safe_b1
    bad = (n1 <= DEGENERACY_EPS) | (np.linalg.norm(u2, axis=-1) <= DEGENERACY_EPS)
    mats = np.tile(np.eye(3), (len(out), 1, 1))
    if np.any(~bad):
        mats[~bad] = gs_map(out[~bad])
    return mats, int(bad.sum())


def heldout_error_deg(mlp, head, inputs, targets):
    mats, _ = predict_matrices(mlp, head, inputs)
    geo, _ = geodesic_matrix_grad(mats, targets)
    return float(np.degrees(geo).mean())


@dataclass
class TrainResult:
    mlp: MLP
    history: List[float]          # held-out mean geodesic error (deg) after each epoch
    train_loss: List[float]       # mean training loss per epoch
    initial_error: float          # held-out error (deg) before training
    final_error: float            # held-out error (deg) after training
    degenerate: int = 0           # degenerate 6D predictions on the held-out split
    config: TrainConfig = field(default=None)


def _target_angles(targets):
    return np.radians([matrix_to_euler(r) for r in targets])


def train(task: SyntheticTask, cfg: TrainConfig, init: MLP = None) -> TrainResult:
    """Train with Adam on the task's training split.

    Deterministic for a fixed ``(task.seed, cfg.seed)``.
    """
    cfg.validate()
    x_train, r_train, x_test, r_test = task.split()
    angles_train = _target_angles(r_train) if cfg.head == "euler" else None
    rng = np.random.default_rng(cfg.seed)
    widths = [x_train.shape[1], *[int(w) for w in cfg.hidden], HEAD_WIDTH[cfg.head]]
    mlp = init.copy() if init is not None else MLP.init(widths, rng)
    if mlp.widths != widths:
        raise ConfigError(f"initial network widths {mlp.widths} do not match {widths}")
    params = mlp.params()
    opt = Adam(params, cfg.learning_rate)
    initial = heldout_error_deg(mlp, cfg.head, x_test, r_test)
    history, losses = [], []
    n = len(x_train)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            out, acts = mlp.forward(x_train[idx], keep=True)
            value, grad_out, _ = batch_loss(
                cfg.head, cfg.loss, out, r_train[idx],
                None if angles_train is None else angles_train[idx], cfg.weight_mse)
            if not math.isfinite(value):
                raise FloatingPointError("training loss became non-finite")
            epoch_loss += value * len(idx)
            opt.step(params, mlp.backward(acts, grad_out))
        losses.append(epoch_loss / n)
        history.append(heldout_error_deg(mlp, cfg.head, x_test, r_test))
    _, degenerate = predict_matrices(mlp, cfg.head, x_test)
    return TrainResult(mlp, history, losses, initial, history[-1], degenerate, cfg)


def sample_loss(mlp, head, loss, x, target, weight_mse=1.0):
    """Scalar loss of one sample; used for gradient checks."""
    out = mlp.forward(np.atleast_2d(x))
    angles = _target_angles(target[None]) if head == "euler" else None
    value, _, _ = batch_loss(head, loss, out, target[None], angles, weight_mse, need_grad=False)
    return value


def sample_param_grads(mlp, head, loss, x, target, weight_mse=1.0):
    out, acts = mlp.forward(np.atleast_2d(x), keep=True)
    angles = _target_angles(target[None]) if head == "euler" else None
    _, grad_out, _ = batch_loss(head, loss, out, target[None], angles, weight_mse)
    return mlp.backward(acts, grad_out)

