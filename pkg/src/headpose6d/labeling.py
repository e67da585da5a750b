"""Head-pose ground truth from 3D facial landmarks and camera extrinsics.

A canonical head template is rigidly aligned (Kabsch) to each frame's world
landmarks. The resulting head-to-world rotation is then expressed in every
camera that sees the frame.

Head frame: +x towards the subject's left, +y down, +z out of the face.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Tuple

import numpy as np

from headpose6d.errors import DegenerateGeometry, DuplicateId, InvalidMatrix, ParseError, UnknownCamera
from headpose6d.poses import PoseRecord
from headpose6d.so3 import gs_drop, gs_map

#: Relative singular-value floor below which a point cloud counts as collinear.
RANK_TOL = 1e-9

DEFAULT_RMSD_MAX = 1.0


def _centered(points):
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValueError("point coordinates must be finite")
    centroid = points.mean(axis=0)
    return points - centroid, centroid


def _rank(centered):
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


@dataclass(frozen=True)
class HeadTemplate:
    """Landmarks in the canonical head frame; re-centred on construction."""

    points: np.ndarray

    def __post_init__(self):
        centered, _ = _centered(self.points)
        if len(centered) < 4 or _rank(centered) < 3:
            raise DegenerateGeometry("head template needs a rank-3 point spread")
        object.__setattr__(self, "points", centered)


@dataclass(frozen=True)
class LandmarkSet:
    points: np.ndarray
    frame_id: str
    subject_id: str
    camera_ids: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CameraExtrinsics:
    """World-to-camera rigid transform ``x_cam = rotation @ x_world + translation``."""

    rotation: np.ndarray
    translation: np.ndarray
    camera_id: str


class Alignment(NamedTuple):
    rotation: np.ndarray
    translation: np.ndarray
    rmsd: float


def default_head_template() -> HeadTemplate:
    """A coarse 11-point head model in centimetres (eyes, nose, mouth, chin, ears)."""
    return HeadTemplate(np.array([
        [4.5, -3.0, 0.0],    # left eye, outer corner
        [1.5, -3.0, 0.5],    # left eye, inner corner
        [-1.5, -3.0, 0.5],   # right eye, inner corner
        [-4.5, -3.0, 0.0],   # right eye, outer corner
        [0.0, 0.0, 3.0],     # nose tip
        [0.0, 1.5, 1.5],     # nose base
        [2.5, 4.0, 0.5],     # mouth, left corner
        [-2.5, 4.0, 0.5],    # mouth, right corner
        [0.0, 7.0, 0.0],     # chin
        [7.0, -1.0, -8.0],   # left ear
        [-7.0, -1.0, -8.0],  # right ear
    ]))


def kabsch_align(template, observed) -> Alignment:
    """Least-squares rigid transform with ``R @ template + t ~ observed``.

    Reflections are corrected by flipping the weakest singular direction,
    so the rotation is always proper. Raises :class:`DegenerateGeometry`
    for coincident or collinear point sets.
    """
    p = template.points if isinstance(template, HeadTemplate) else template
    q = observed.points if isinstance(observed, LandmarkSet) else observed
    p, p_mean = _centered(p)
    q, q_mean = _centered(q)
    if p.shape != q.shape:
        raise ValueError(f"point count mismatch: template {len(p)}, observed {len(q)}")
    if _rank(p) < 2 or _rank(q) < 2:
        raise DegenerateGeometry("landmarks are coincident or collinear")
    u, _, vt = np.linalg.svd(p.T @ q)
    d = 1.0 if np.linalg.det(vt.T @ u.T) >= 0 else -1.0
    rotation = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    translation = q_mean - rotation @ p_mean
    residual = p @ rotation.T - q
    rmsd = float(np.sqrt(np.mean(np.sum(residual * residual, axis=1))))
    return Alignment(rotation, translation, rmsd)


def world_to_camera_pose(r_head_world, cam: CameraExtrinsics) -> np.ndarray:
    """Head orientation in the camera frame, ``cam.rotation @ r_head_world``."""
    return np.asarray(cam.rotation, float) @ np.asarray(r_head_world, float)


@dataclass
class LabelResult:
    records: List[PoseRecord] = field(default_factory=list)
    skipped: int = 0
    skipped_frames: List[str] = field(default_factory=list)


def label_dataset(frames: Iterable[LandmarkSet], cameras: Dict[str, CameraExtrinsics],
                  template: HeadTemplate, rmsd_max=DEFAULT_RMSD_MAX) -> LabelResult:
    """Matrix pose records ``subject_frame_camera`` for every frame/camera pair.

    Frames whose alignment is degenerate or has rmsd above ``rmsd_max`` are
    skipped and counted. Output is sorted by id.
    """
    result = LabelResult()
    seen = set()
    for lm in frames:
        for cam_id in lm.camera_ids:
            if cam_id not in cameras:
                raise UnknownCamera(cam_id)
        frame_key = f"{lm.subject_id}_{lm.frame_id}"
        try:
            align = kabsch_align(template, lm)
        except DegenerateGeometry:
            align = None
        if align is None or align.rmsd > rmsd_max:
            result.skipped += 1
            result.skipped_frames.append(frame_key)
            continue
        for cam_id in lm.camera_ids:
            record_id = f"{frame_key}_{cam_id}"
            if record_id in seen:
                raise DuplicateId(record_id)
            seen.add(record_id)
            pose = world_to_camera_pose(align.rotation, cameras[cam_id])
            result.records.append(PoseRecord(record_id, "matrix", tuple(float(v) for v in pose.reshape(9))))
    result.records.sort(key=lambda r: r.id)
    return result


# ---------------------------------------------------------------------------
# landmark JSON


def _points(value, where):
    try:
        pts = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(None, f"{where}: points must be a list of [x, y, z]") from None
    if pts.ndim != 2 or pts.shape[1] != 3 or not np.all(np.isfinite(pts)):
        raise ParseError(None, f"{where}: points must be a list of finite [x, y, z]")
    return pts


def parse_landmarks(doc: dict):
    """``(template, cameras, frames)`` from a decoded landmark JSON document.

    A frame's ``"camera"`` may be a single id or a list of ids.
    """
    for key in ("template", "cameras", "frames"):
        if key not in doc:
            raise ParseError(None, f"missing top-level key {key!r}")
    try:
        template = HeadTemplate(_points(doc["template"], "template"))
    except DegenerateGeometry as exc:
        raise ParseError(None, f"template: {exc}") from None

    cameras = {}
    for cam_id, cam in doc["cameras"].items():
        try:
            r = np.asarray(cam["R"], dtype=float).reshape(3, 3)
            t = np.asarray(cam["t"], dtype=float).reshape(3)
        except (KeyError, TypeError, ValueError):
            raise ParseError(None, f"camera {cam_id!r}: needs a 3x3 'R' and a 3-vector 't'") from None
        if (np.max(np.abs(r @ r.T - np.eye(3))) > 1e-6 or abs(np.linalg.det(r) - 1.0) > 1e-6):
            raise InvalidMatrix(cam_id, "camera rotation fails orthogonality")
        cameras[str(cam_id)] = CameraExtrinsics(gs_map(gs_drop(r)), t, str(cam_id))

    frames = []
    n_template = len(template.points)
    for k, fr in enumerate(doc["frames"]):
        where = f"frames[{k}]"
        try:
            subject, frame, cams = fr["subject"], fr["frame"], fr["camera"]
        except (KeyError, TypeError):
            raise ParseError(None, f"{where}: needs 'subject', 'frame', 'camera' and 'points'") from None
        pts = _points(fr.get("points"), where)
        if len(pts) != n_template:
            raise ParseError(None, f"{where}: {len(pts)} points, template has {n_template}")
        cams = tuple(str(c) for c in cams) if isinstance(cams, list) else (str(cams),)
        frames.append(LandmarkSet(pts, str(frame), str(subject), cams))
    return template, cameras, frames


def load_landmark_json(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from None
    if not isinstance(doc, dict):
        raise ParseError(1, "top level must be an object")
    return parse_landmarks(doc)
