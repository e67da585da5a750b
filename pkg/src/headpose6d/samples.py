"""A pair of near-identical head poses with very different Euler/quaternion labels.

Two 300W-LP samples printed to three decimals. Their rotation matrices are
about 0.1 rad apart, yet yaw differs by ~180 degrees and the quaternions
have opposite sign patterns. Used by the ``demo-ambiguity`` CLI command and
as a convention fixture.

Quaternions were printed scalar-last ``(x, y, z, w)``; they are stored here
in this package's ``(w, x, y, z)`` order.
"""

import numpy as np

from headpose6d.so3 import EulerAngles, UnitQuaternion

LEFT_EULER = EulerAngles(87.73, 89.32, -87.93)
RIGHT_EULER = EulerAngles(-92.51, -98.02, 81.73)

# printed as [0.707, -0.023, -0.707, 0.031] and [-0.707, -0.029, 0.706, 0.041]
LEFT_QUAT = UnitQuaternion(0.031, 0.707, -0.023, -0.707)
RIGHT_QUAT = UnitQuaternion(0.041, -0.707, -0.029, 0.706)

LEFT_MATRIX = np.array([
    [0.000, 0.012, -0.999],
    [-0.076, -0.997, -0.012],
    [-0.997, 0.076, 0.000],
])
RIGHT_MATRIX = np.array([
    [0.002, -0.017, -0.999],
    [0.100, -0.995, 0.017],
    [-0.995, -0.100, -0.001],
])

#: Entry tolerance that matches the three printed decimals.
PRINT_TOL = 5e-3
