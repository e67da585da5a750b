"""Rotation geometry, 6D rotation regression and head-pose evaluation."""

from headpose6d.errors import (
    ConfigError,
    DataError,
    DegenerateGeometry,
    DegenerateInput,
    DuplicateId,
    EmptySet,
    InvalidMatrix,
    MismatchedIds,
    ParseError,
    UnknownCamera,
)
from headpose6d.so3 import (
    AxisAngle,
    EulerAngles,
    UnitQuaternion,
    axis_angle_to_matrix,
    axis_angle_to_quat,
    euler_to_matrix,
    gs_drop,
    gs_map,
    matrix_to_axis_angle,
    matrix_to_euler,
    matrix_to_quat,
    quat_to_axis_angle,
    quat_to_matrix,
    random_rotation,
    relative_angle,
)
from headpose6d.losses import (
    combined_loss_6d,
    geodesic_distance,
    geodesic_loss_6d,
    mse_loss_6d,
)

__version__ = "0.1.0"
