import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from headpose6d import samples
from headpose6d.errors import DegenerateInput
from headpose6d.so3 import (
    AxisAngle,
    EulerAngles,
    UnitQuaternion,
    axis_angle_to_matrix,
    axis_angle_to_quat,
    canonical_quat,
    euler_to_matrix,
    exp_map,
    gs_drop,
    gs_map,
    is_rotation,
    matrix_to_axis_angle,
    matrix_to_euler,
    matrix_to_quat,
    orthogonality_error,
    quat_to_axis_angle,
    quat_to_matrix,
    random_rotation,
    random_rotations,
    relative_angle,
    rot_x,
    rot_y,
    rot_z,
    wrap_degrees,
)

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
sixd_vectors = st.lists(finite, min_size=6, max_size=6).map(np.array)


def _nondegenerate(s):
    a1, a2 = s[:3], s[3:]
    if np.linalg.norm(a1) < 1e-3:
        return False
    b1 = a1 / np.linalg.norm(a1)
    return np.linalg.norm(a2 - b1 * (b1 @ a2)) > 1e-3


# --- 6D -------------------------------------------------------------------


def test_gs_drop_identity():
    np.testing.assert_array_equal(gs_drop(np.eye(3)), [1, 0, 0, 0, 1, 0])


def test_gs_drop_rot_z_90_is_first_two_columns():
    r = rot_z(math.pi / 2)
    s = gs_drop(r)
    np.testing.assert_allclose(s[:3], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(s[3:], [-1, 0, 0], atol=1e-15)


def test_gs_drop_printed_matrix_is_copy_of_columns():
    s = gs_drop(samples.LEFT_MATRIX)
    np.testing.assert_array_equal(s[:3], [0.000, -0.076, -0.997])
    np.testing.assert_array_equal(s[3:], [0.012, -0.997, 0.076])


def test_gs_map_analytic_case():
    np.testing.assert_array_equal(gs_map([2, 0, 0, 1, 1, 0]), np.eye(3))


@pytest.mark.parametrize("s", [
    [1, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 0],
    [1e-10, 0, 0, 0, 1, 0],
    [1, 2, 3, -2, -4, -6],
])
def test_gs_map_degenerate(s):
    with pytest.raises(DegenerateInput):
        gs_map(s)


def test_gs_map_round_trip_batch():
    rs = random_rotations(np.random.default_rng(1), 2000)
    assert np.max(np.abs(gs_map(gs_drop(rs)) - rs)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(sixd_vectors.filter(_nondegenerate))
def test_gs_map_always_rotation(s):
    r = gs_map(s)
    assert orthogonality_error(r) <= 1e-9
    assert abs(np.linalg.det(r) - 1) <= 1e-9
    # idempotent
    assert np.max(np.abs(gs_map(gs_drop(r)) - r)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(sixd_vectors.filter(_nondegenerate), st.sampled_from([0.1, 1.0, 10.0]))
def test_gs_map_scale_invariant_in_a1(s, lam):
    scaled = s.copy()
    scaled[:3] *= lam
    assert np.max(np.abs(gs_map(scaled) - gs_map(s))) <= 1e-12


def test_sixd_continuity(rng):
    for _ in range(500):
        r = random_rotation(rng)
        delta = rng.standard_normal(3)
        delta *= rng.uniform(1e-6, 1e-3) / np.linalg.norm(delta)
        r2 = r @ exp_map(delta)
        d = relative_angle(r, r2)
        assert d <= 1e-3 + 1e-12
        assert np.linalg.norm(gs_drop(r) - gs_drop(r2)) <= 2 * d + 1e-12


# --- Euler ----------------------------------------------------------------


def test_euler_zero_is_identity():
    np.testing.assert_array_equal(euler_to_matrix((0, 0, 0)), np.eye(3))
    assert matrix_to_euler(np.eye(3)) == (0.0, 0.0, 0.0)


def test_euler_convention_written_out():
    yaw, pitch, roll = 20.0, -35.0, 50.0
    expected = rot_x(math.radians(-roll)) @ rot_y(math.radians(-pitch)) @ rot_z(math.radians(-yaw))
    np.testing.assert_allclose(euler_to_matrix((yaw, pitch, roll)), expected, atol=1e-15)
    # single-axis behaviour
    np.testing.assert_allclose(euler_to_matrix((30, 0, 0)), rot_z(math.radians(-30)), atol=1e-15)
    np.testing.assert_allclose(euler_to_matrix((0, 30, 0)), rot_y(math.radians(-30)), atol=1e-15)
    np.testing.assert_allclose(euler_to_matrix((0, 0, 30)), rot_x(math.radians(-30)), atol=1e-15)


def test_euler_left_sample_matches_printed_matrix():
    err = np.max(np.abs(euler_to_matrix(samples.LEFT_EULER) - samples.LEFT_MATRIX))
    assert err <= samples.PRINT_TOL


def test_matrix_to_euler_left_sample_reproduces_matrix():
    e = matrix_to_euler(gs_map(gs_drop(samples.LEFT_MATRIX)))
    assert np.max(np.abs(euler_to_matrix(e) - samples.LEFT_MATRIX)) <= samples.PRINT_TOL


def test_euler_round_trip_away_from_gimbal_lock(rng):
    for _ in range(5000):
        e = (rng.uniform(-180, 180), rng.uniform(-89, 89), rng.uniform(-180, 180))
        back = matrix_to_euler(euler_to_matrix(e))
        np.testing.assert_allclose(wrap_degrees(np.subtract(back, e)), 0.0, atol=1e-9)


@pytest.mark.parametrize("pitch", [90.0, -90.0])
def test_gimbal_lock_branch_sets_roll_zero(pitch):
    r = euler_to_matrix((30.0, pitch, 20.0))
    e = matrix_to_euler(r)
    assert e.roll == 0.0
    assert e.pitch == pytest.approx(pitch, abs=1e-6)
    assert np.max(np.abs(euler_to_matrix(e) - r)) <= 1e-9


def test_matrix_to_euler_canonical_range(rng):
    for r in random_rotations(rng, 2000):
        e = matrix_to_euler(r)
        assert -180 < e.yaw <= 180 and -90 <= e.pitch <= 90 and -180 < e.roll <= 180
        assert np.max(np.abs(euler_to_matrix(e) - r)) <= 1e-9


def test_wrap_degrees():
    assert wrap_degrees(-180.0) == 180.0
    assert wrap_degrees(540.0) == 180.0
    assert wrap_degrees(358.0) == pytest.approx(-2.0)
    np.testing.assert_allclose(wrap_degrees(np.array([-180.0, 181.0, 2.0])), [180.0, -179.0, 2.0])


# --- quaternions ------------------------------------------------------------


def test_quat_identity():
    np.testing.assert_array_equal(quat_to_matrix((1, 0, 0, 0)), np.eye(3))
    assert matrix_to_quat(np.eye(3)) == (1.0, 0.0, 0.0, 0.0)


def test_quat_180_about_x_is_canonical():
    q = matrix_to_quat(np.diag([1.0, -1.0, -1.0]))
    assert q == (0.0, 1.0, 0.0, 0.0)
    assert all(math.copysign(1, v) > 0 for v in q)  # no negative zeros


def test_printed_quaternions_match_printed_matrices():
    assert np.max(np.abs(quat_to_matrix(samples.LEFT_QUAT) - samples.LEFT_MATRIX)) <= samples.PRINT_TOL
    assert np.max(np.abs(quat_to_matrix(samples.RIGHT_QUAT) - samples.RIGHT_MATRIX)) <= samples.PRINT_TOL


def test_quat_double_cover_exact(rng):
    for _ in range(200):
        q = rng.standard_normal(4)
        np.testing.assert_array_equal(quat_to_matrix(q), quat_to_matrix(-q))


def test_matrix_quat_round_trip(rng):
    worst = 0.0
    for r in random_rotations(rng, 10_000):
        q = matrix_to_quat(r)
        assert q.w >= 0
        worst = max(worst, np.max(np.abs(quat_to_matrix(q) - r)))
    assert worst <= 1e-9


def test_matrix_to_quat_near_pi_is_stable():
    for axis in np.eye(3):
        for eps in (0.0, 1e-12, 1e-8):
            r = axis_angle_to_matrix(AxisAngle(tuple(axis), math.pi - eps))
            q = matrix_to_quat(r)
            assert np.max(np.abs(quat_to_matrix(q) - r)) <= 1e-12


def test_canonical_sign_rules():
    assert canonical_quat((-1, 0, 0, 0)) == (1, 0, 0, 0)
    assert canonical_quat((0, 0, -1, 0)) == (0, 0, 1, 0)
    assert canonical_quat((0, 0, 0.6, -0.8)) == (0, 0, 0.6, -0.8)
    assert UnitQuaternion(0, 1, 0, 0).same_rotation(-UnitQuaternion(0, 1, 0, 0))


# --- axis-angle -------------------------------------------------------------


@pytest.mark.parametrize("axis, angle, expected", [
    ((0, 0, 1), 0.0, (1, 0, 0, 0)),
    ((1, 0, 0), math.pi, (0, 1, 0, 0)),
    ((0, 1, 0), math.pi / 2, (math.cos(math.pi / 4), 0, math.sin(math.pi / 4), 0)),
])
def test_axis_angle_to_quat(axis, angle, expected):
    np.testing.assert_allclose(axis_angle_to_quat(AxisAngle(axis, angle)), expected, atol=1e-15)


def test_quat_to_axis_angle_special_cases():
    aa = quat_to_axis_angle((1, 0, 0, 0))
    assert aa.axis == (1.0, 0.0, 0.0) and aa.angle == 0.0
    aa = quat_to_axis_angle((0, 0, 1, 0))
    np.testing.assert_allclose(aa.axis, (0, 1, 0))
    assert aa.angle == pytest.approx(math.pi, abs=1e-15)


def test_axis_angle_round_trip(rng):
    for _ in range(10_000):
        q = rng.standard_normal(4)
        aa = quat_to_axis_angle(q)
        assert 0.0 <= aa.angle <= math.pi
        assert abs(np.linalg.norm(aa.axis) - 1) <= 1e-9
        assert relative_angle(axis_angle_to_matrix(aa), quat_to_matrix(q)) <= 1e-9
        assert relative_angle(axis_angle_to_matrix(matrix_to_axis_angle(quat_to_matrix(q))),
                              quat_to_matrix(q)) <= 1e-9


def test_conversions_agree_under_composition(rng):
    for _ in range(1000):
        r = random_rotation(rng) @ random_rotation(rng)
        chain = quat_to_matrix(matrix_to_quat(r))
        chain = euler_to_matrix(matrix_to_euler(chain))
        chain = gs_map(gs_drop(chain))
        chain = axis_angle_to_matrix(matrix_to_axis_angle(chain))
        assert relative_angle(chain, r) <= 1e-9


# --- sampling ---------------------------------------------------------------


def test_random_rotation_deterministic():
    np.testing.assert_array_equal(random_rotation(42), random_rotation(42))
    a = random_rotation(np.random.default_rng(7))
    b = random_rotation(np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_random_rotations_are_valid(rng):
    rs = random_rotations(rng, 10_000)
    assert all(is_rotation(r) for r in rs[:500])
    assert np.max(np.abs(rs @ np.swapaxes(rs, 1, 2) - np.eye(3))) <= 1e-9
    assert np.max(np.abs(np.linalg.det(rs) - 1)) <= 1e-9


def test_random_rotations_haar_moments():
    # Monte-Carlo oracle: under the Haar measure E[tr R] = 0 and E[tr(R)^2] = 1
    rs = random_rotations(np.random.default_rng(123), 100_000)
    tr = np.trace(rs, axis1=1, axis2=2)
    assert abs(tr.mean()) <= 0.02
    assert abs((tr ** 2).mean() - 1.0) <= 0.02
    # rotation angle density (1 - cos t) / pi has mean pi/2 + 2/pi
    angles = np.arccos(np.clip((tr - 1) / 2, -1, 1))
    assert angles.mean() == pytest.approx(math.pi / 2 + 2 / math.pi, abs=0.01)


def test_euler_angles_namedtuple():
    e = EulerAngles(1.0, 2.0, 3.0)
    assert e.yaw == 1.0 and tuple(e) == (1.0, 2.0, 3.0)
