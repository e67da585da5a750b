"""Pose records, pose sets and the pose CSV format.

A pose CSV holds one representation per file, chosen by its header::

    id,yaw,pitch,roll                              euler, degrees
    id,r11,r12,r13,r21,r22,r23,r31,r32,r33         matrix, row-major
    id,qw,qx,qy,qz                                 quat
    id,a1x,a1y,a1z,a2x,a2y,a2z                     sixd (first two columns)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np

from headpose6d.errors import (
    DegenerateInput,
    DuplicateId,
    EmptySet,
    InvalidMatrix,
    ParseError,
)
from headpose6d.so3 import (
    EulerAngles,
    euler_to_matrix,
    gs_drop,
    gs_map,
    matrix_to_euler,
    matrix_to_quat,
    quat_to_matrix,
)

HEADERS = {
    "euler": ("id", "yaw", "pitch", "roll"),
    "matrix": ("id", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"),
    "quat": ("id", "qw", "qx", "qy", "qz"),
    "sixd": ("id", "a1x", "a1y", "a1z", "a2x", "a2y", "a2z"),
}
TAGS = tuple(HEADERS)

#: Orthogonality / determinant tolerance for matrix payloads read from disk.
MATRIX_LOAD_TOL = 1e-6


@dataclass(frozen=True)
class PoseRecord:
    id: str
    tag: str
    payload: tuple

    def __post_init__(self):
        if self.tag not in HEADERS:
            raise ValueError(f"unknown representation tag {self.tag!r}")
        if len(self.payload) != len(HEADERS[self.tag]) - 1:
            raise ValueError(f"{self.tag} payload needs {len(HEADERS[self.tag]) - 1} values, "
                             f"got {len(self.payload)}")
        if not all(math.isfinite(v) for v in self.payload):
            raise ValueError(f"record {self.id!r} has non-finite values")

    def to_matrix(self) -> np.ndarray:
        p = np.asarray(self.payload, dtype=float)
        if self.tag == "euler":
            return euler_to_matrix(p)
        if self.tag == "quat":
            return quat_to_matrix(p)
        if self.tag == "sixd":
            return gs_map(p)
        # re-orthonormalise through the 6D map so there is one orthogonalisation path
        return gs_map(gs_drop(p.reshape(3, 3)))

    def to_euler(self) -> EulerAngles:
        if self.tag == "euler":
            return EulerAngles(*self.payload)
        return matrix_to_euler(self.to_matrix())


def payload_from_matrix(m, tag) -> tuple:
    """Encode a rotation matrix as the payload of representation ``tag``."""
    m = np.asarray(m, dtype=float)
    if tag == "matrix":
        values = m.reshape(9)
    elif tag == "euler":
        values = matrix_to_euler(m)
    elif tag == "quat":
        values = matrix_to_quat(m)
    elif tag == "sixd":
        values = gs_drop(m)
    else:
        raise ValueError(f"unknown representation tag {tag!r}")
    return tuple(float(v) for v in values)


@dataclass
class PoseSet:
    """Id-keyed poses sharing one representation tag."""

    tag: str
    records: Dict[str, PoseRecord] = field(default_factory=dict)
    source: Optional[Path] = None

    def __len__(self):
        return len(self.records)

    def __contains__(self, record_id):
        return record_id in self.records

    def __getitem__(self, record_id) -> PoseRecord:
        return self.records[record_id]

    def ids(self):
        """Ids in ascending order (the order every reduction uses)."""
        return sorted(self.records)

    def add(self, record_id, payload):
        if record_id in self.records:
            raise DuplicateId(record_id)
        self.records[record_id] = PoseRecord(record_id, self.tag, tuple(float(v) for v in payload))

    def matrix(self, record_id) -> np.ndarray:
        return self.records[record_id].to_matrix()

    def euler(self, record_id) -> EulerAngles:
        return self.records[record_id].to_euler()

    def converted(self, tag) -> "PoseSet":
        """Same rotations expressed in representation ``tag``."""
        out = PoseSet(tag, source=self.source)
        for record_id, rec in self.records.items():
            if tag == self.tag:
                out.records[record_id] = rec
            else:
                out.add(record_id, payload_from_matrix(rec.to_matrix(), tag))
        return out

    @classmethod
    def from_matrices(cls, items: Iterable, tag="matrix") -> "PoseSet":
        """Build from ``(id, matrix)`` pairs, encoding each as ``tag``."""
        out = cls(tag)
        for record_id, m in items:
            out.add(record_id, payload_from_matrix(m, tag))
        return out


def _check_rotation_payload(rec: PoseRecord):
    if rec.tag == "matrix":
        m = np.asarray(rec.payload).reshape(3, 3)
        ortho = float(np.max(np.abs(m @ m.T - np.eye(3))))
        det = float(np.linalg.det(m))
        if ortho > MATRIX_LOAD_TOL or abs(det - 1.0) > MATRIX_LOAD_TOL:
            raise InvalidMatrix(rec.id, f"|RR^T - I| = {ortho:.3g}, det = {det:.9g}")
    try:
        rec.to_matrix()
    except DegenerateInput as exc:
        raise InvalidMatrix(rec.id, str(exc)) from None


def load_pose_csv(path) -> PoseSet:
    """Read a pose CSV; errors carry the 1-based line number."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "empty file, expected a header row") from None
        header = tuple(h.strip() for h in header)
        tag = next((t for t, cols in HEADERS.items() if cols == header), None)
        if tag is None:
            raise ParseError(1, f"unrecognised header {','.join(header)!r}")
        poses = PoseSet(tag, source=path)
        width = len(header)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(line, f"expected {width} columns, got {len(row)}")
            record_id = row[0].strip()
            if not record_id:
                raise ParseError(line, "empty id")
            try:
                payload = tuple(float(c) for c in row[1:])
            except ValueError as exc:
                raise ParseError(line, str(exc)) from None
            if not all(math.isfinite(v) for v in payload):
                raise ParseError(line, "non-finite value")
            if record_id in poses.records:
                raise DuplicateId(record_id, line)
            if tag == "quat" and not any(payload):
                raise ParseError(line, "zero quaternion")
            rec = PoseRecord(record_id, tag, payload)
            _check_rotation_payload(rec)
            poses.records[record_id] = rec
    return poses


def save_pose_csv(poses: PoseSet, path):
    """Write ``poses`` with shortest round-trip float formatting (value-exact reload)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADERS[poses.tag])
        for record_id, rec in poses.records.items():
            writer.writerow([record_id, *(repr(float(v)) for v in rec.payload)])


def require_nonempty(poses: PoseSet):
    if not len(poses):
        raise EmptySet("pose set is empty")
