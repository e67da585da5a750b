"""Head-pose error metrics: Euler MAE, per-vector MAEV and interval bins.

All reductions iterate ids in ascending order so results do not depend on
file row order.
"""

from __future__ import annotations

import math
from typing import List, NamedTuple, Optional

import numpy as np

from headpose6d.errors import EmptySet, MismatchedIds
from headpose6d.so3 import wrap_degrees

ANGLES = ("yaw", "pitch", "roll")

#: Matrix column behind each named direction vector. Kept in one place so
#: the row/column reading can be flipped without touching the metric math.
VECTOR_COLUMNS = {"left": 0, "down": 1, "front": 2}

#: Default interval layout for binned errors (degrees).
DEFAULT_SPAN = (-99.0, 99.0)
DEFAULT_BIN_WIDTH = 33.0


class AngleMAE(NamedTuple):
    yaw: float
    pitch: float
    roll: float
    overall: float


class VectorMAEV(NamedTuple):
    left: float
    down: float
    front: float
    overall: float


class Bin(NamedTuple):
    angle: str
    lo: float
    hi: float
    count: int
    mae: Optional[float]  # None for an empty bin


def paired_ids(gt, pred, intersect=False) -> List[str]:
    """Sorted ids shared by ``gt`` and ``pred``.

    Unless ``intersect`` is set, any id present in only one set raises
    :class:`MismatchedIds`. An empty result raises :class:`EmptySet`.
    """
    gt_ids, pred_ids = set(gt.records), set(pred.records)
    if not intersect and gt_ids != pred_ids:
        raise MismatchedIds(gt_ids - pred_ids, pred_ids - gt_ids)
    ids = sorted(gt_ids & pred_ids)
    if not ids:
        raise EmptySet("no samples to evaluate")
    return ids


def euler_arrays(gt, pred, ids):
    """Ground-truth and predicted ``(N, 3)`` Euler arrays in degrees."""
    g = np.array([gt.euler(i) for i in ids], dtype=float)
    p = np.array([pred.euler(i) for i in ids], dtype=float)
    return g, p


def angle_errors(g, p, wrap=False):
    """Absolute per-angle errors; ``wrap`` reduces differences to (-180, 180] first."""
    diff = np.asarray(g, float) - np.asarray(p, float)
    if wrap:
        diff = wrap_degrees(diff)
    return np.abs(diff)


def mae_euler(gt, pred, wrap=False, intersect=False) -> AngleMAE:
    ids = paired_ids(gt, pred, intersect)
    errors = angle_errors(*euler_arrays(gt, pred, ids), wrap=wrap)
    per_angle = [float(v) for v in errors.mean(axis=0)]
    return AngleMAE(*per_angle, sum(per_angle) / 3.0)


def vector_angles(rg, rp):
    """Angles in degrees between matching columns of two matrices (or stacks)."""
    rg, rp = np.asarray(rg, float), np.asarray(rp, float)
    dots = np.sum(rg * rp, axis=-2)
    norms = np.linalg.norm(rg, axis=-2) * np.linalg.norm(rp, axis=-2)
    return np.degrees(np.arccos(np.clip(dots / norms, -1.0, 1.0)))


def maev(gt, pred, intersect=False) -> VectorMAEV:
    ids = paired_ids(gt, pred, intersect)
    rg = np.stack([gt.matrix(i) for i in ids])
    rp = np.stack([pred.matrix(i) for i in ids])
    per_column = vector_angles(rg, rp).mean(axis=0)
    per_vector = [float(per_column[VECTOR_COLUMNS[name]]) for name in ("left", "down", "front")]
    return VectorMAEV(*per_vector, sum(per_vector) / 3.0)


def bin_edges(values, bin_width, span=DEFAULT_SPAN):
    """Edges ``span[0] + k * bin_width`` covering ``span`` and every value.

    Bins are added below or above the default span when values fall
    outside it, so every sample lands in exactly one bin.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    lo, hi = span
    values = np.asarray(values, float)
    k_lo = 0
    k_hi = max(1, math.ceil((hi - lo) / bin_width - 1e-12))
    if values.size:
        k_lo = min(k_lo, math.floor((values.min() - lo) / bin_width))
        k_hi = max(k_hi, math.ceil((values.max() - lo) / bin_width))
    edges = lo + bin_width * np.arange(k_lo, k_hi + 1, dtype=float)
    if values.size and values.max() > edges[-1]:
        edges = np.append(edges, edges[-1] + bin_width)
    if values.size and values.min() < edges[0]:
        edges = np.insert(edges, 0, edges[0] - bin_width)
    return edges


def assign_bins(values, edges):
    """Bin index per value for half-open ``[lo, hi)`` bins, last bin closed."""
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.where(idx == len(edges) - 1, len(edges) - 2, idx)


def binned_errors(gt, pred, bin_width=DEFAULT_BIN_WIDTH, wrap=False, span=DEFAULT_SPAN,
                  intersect=False) -> List[Bin]:
    """Per-angle MAE bucketed by the ground-truth value of that angle."""
    ids = paired_ids(gt, pred, intersect)
    g, p = euler_arrays(gt, pred, ids)
    errors = angle_errors(g, p, wrap=wrap)
    bins = []
    for k, name in enumerate(ANGLES):
        edges = bin_edges(g[:, k], bin_width, span)
        which = assign_bins(g[:, k], edges)
        for b in range(len(edges) - 1):
            members = errors[which == b, k]
            mae = float(members.mean()) if members.size else None
            bins.append(Bin(name, float(edges[b]), float(edges[b + 1]), int(members.size), mae))
    return bins
