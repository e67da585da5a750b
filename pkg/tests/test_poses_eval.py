import json
import math

import numpy as np
import pytest

from headpose6d.errors import DuplicateId, InvalidMatrix, MismatchedIds, ParseError
from headpose6d.evaluation import TABLE_COLUMNS, evaluate
from headpose6d.poses import HEADERS, TAGS, PoseSet, load_pose_csv, save_pose_csv
from headpose6d.so3 import euler_to_matrix, random_rotations, relative_angle


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_single_euler_record(tmp_path):
    poses = load_pose_csv(write(tmp_path / "a.csv", "id,yaw,pitch,roll\na,10,20,30\n"))
    assert poses.tag == "euler" and len(poses) == 1
    assert poses["a"].payload == (10.0, 20.0, 30.0)


def test_duplicate_id(tmp_path):
    with pytest.raises(DuplicateId) as exc:
        load_pose_csv(write(tmp_path / "a.csv", "id,yaw,pitch,roll\na,1,2,3\nb,1,2,3\na,0,0,0\n"))
    assert exc.value.id == "a"


def test_invalid_matrix_names_offending_id(tmp_path):
    text = "id,r11,r12,r13,r21,r22,r23,r31,r32,r33\nok,1,0,0,0,1,0,0,0,1\nbad,1.00001,0,0,0,1,0,0,0,1\n"
    with pytest.raises(InvalidMatrix) as exc:
        load_pose_csv(write(tmp_path / "m.csv", text))
    assert exc.value.id == "bad"


def test_reflection_matrix_rejected(tmp_path):
    text = "id,r11,r12,r13,r21,r22,r23,r31,r32,r33\nm,1,0,0,0,1,0,0,0,-1\n"
    with pytest.raises(InvalidMatrix):
        load_pose_csv(write(tmp_path / "m.csv", text))


def test_matrix_within_tolerance_is_reorthonormalised(tmp_path):
    r = euler_to_matrix((10, 20, 30))
    noisy = r + 1e-8 * np.random.default_rng(0).standard_normal((3, 3))
    text = "id," + ",".join(HEADERS["matrix"][1:]) + "\nx," + ",".join(repr(float(v)) for v in noisy.ravel()) + "\n"
    poses = load_pose_csv(write(tmp_path / "m.csv", text))
    m = poses.matrix("x")
    assert np.max(np.abs(m @ m.T - np.eye(3))) <= 1e-12
    assert np.max(np.abs(m - r)) <= 1e-7


@pytest.mark.parametrize("text, line", [
    ("id,yaw,pitch\n", 1),
    ("", 1),
    ("id,yaw,pitch,roll\na,1,2\n", 2),
    ("id,yaw,pitch,roll\na,1,2,3\nb,x,2,3\n", 3),
    ("id,yaw,pitch,roll\na,1,2,nan\n", 2),
    ("id,qw,qx,qy,qz\nq,0,0,0,0\n", 2),
    ("id,yaw,pitch,roll\n,1,2,3\n", 2),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    with pytest.raises(ParseError) as exc:
        load_pose_csv(write(tmp_path / "bad.csv", text))
    assert exc.value.line == line


def test_degenerate_sixd_rejected(tmp_path):
    with pytest.raises(InvalidMatrix):
        load_pose_csv(write(tmp_path / "s.csv", "id,a1x,a1y,a1z,a2x,a2y,a2z\ns,1,0,0,2,0,0\n"))


@pytest.mark.parametrize("tag", TAGS)
def test_save_load_value_exact(tmp_path, tag, rng):
    mats = random_rotations(rng, 50)
    poses = PoseSet.from_matrices(((f"r{i}", m) for i, m in enumerate(mats)), tag)
    path = tmp_path / f"{tag}.csv"
    save_pose_csv(poses, path)
    back = load_pose_csv(path)
    assert back.tag == tag and list(back.records) == list(poses.records)
    for rid in poses.ids():
        assert back[rid].payload == poses[rid].payload
    raw = path.read_bytes()
    assert b"\r\n" not in raw


def test_convert_cycle_returns_start(rng):
    mats = random_rotations(rng, 200)
    start = PoseSet.from_matrices(((f"r{i}", m) for i, m in enumerate(mats)), "matrix")
    cur = start
    for tag in ("euler", "quat", "sixd", "matrix", "sixd", "euler"):
        cur = cur.converted(tag)
    for rid in start.ids():
        assert relative_angle(cur.matrix(rid), start.matrix(rid)) <= 1e-9


# --- evaluate ---------------------------------------------------------------


def test_evaluate_identical_any_repr(rng):
    mats = random_rotations(rng, 40)
    base = PoseSet.from_matrices(((f"r{i}", m) for i, m in enumerate(mats)), "matrix")
    for tag in TAGS:
        rep = evaluate(base, base.converted(tag))
        assert max(rep.mae) <= 1e-6
        assert max(rep.maev) <= 1e-5  # acos of ~1 dot products
        assert all(b.mae is None or b.mae <= 1e-6 for b in rep.bins)


def test_single_sample_hand_oracle():
    gt, pred = PoseSet("euler"), PoseSet("euler")
    gt.add("a", (0, 0, 0))
    pred.add("a", (3, 0, 0))
    rep = evaluate(gt, pred)
    assert rep.mae.yaw == pytest.approx(3.0) and rep.mae.overall == pytest.approx(1.0)
    # yaw 3 deg is Rz(-3 deg): left and down columns turn by 3 deg about z, front stays put
    assert rep.maev.left == pytest.approx(3.0, abs=1e-6)
    assert rep.maev.down == pytest.approx(3.0, abs=1e-6)
    assert rep.maev.front == pytest.approx(0.0, abs=1e-6)
    assert rep.maev.overall == pytest.approx(2.0, abs=1e-6)


def test_half_normal_noise_recovery():
    rng = np.random.default_rng(11)
    n, sigma = 1000, np.array([2.0, 3.0, 4.0])
    g = np.column_stack([rng.uniform(-80, 80, n), rng.uniform(-60, 60, n), rng.uniform(-80, 80, n)])
    p = g + rng.standard_normal((n, 3)) * sigma
    gt, pred = PoseSet("euler"), PoseSet("euler")
    for i in range(n):
        gt.add(f"{i}", g[i])
        pred.add(f"{i}", p[i])
    rep = evaluate(gt, pred)
    expected = sigma * math.sqrt(2 / math.pi)
    np.testing.assert_allclose(rep.mae[:3], expected, rtol=0.10)


def test_evaluate_mismatch_lists_ids():
    gt, pred = PoseSet("euler"), PoseSet("euler")
    for i in range(15):
        gt.add(f"g{i:02d}", (0, 0, 0))
    pred.add("other", (0, 0, 0))
    with pytest.raises(MismatchedIds) as exc:
        evaluate(gt, pred)
    msg = str(exc.value)
    assert "g00" in msg and "g09" in msg and "g10" not in msg and "other" in msg


def test_report_json_and_table_agree(rng):
    mats = random_rotations(rng, 60)
    noisy = [m @ euler_to_matrix(rng.normal(0, 5, 3)) for m in mats]
    gt = PoseSet.from_matrices(((f"r{i}", m) for i, m in enumerate(mats)), "euler")
    pred = PoseSet.from_matrices(((f"r{i}", m) for i, m in enumerate(noisy)), "quat")
    rep = evaluate(gt, pred, wrap=True)
    doc = json.loads(rep.to_json())
    assert set(doc) == {"mae", "maev", "bins", "n", "options"}
    assert set(doc["mae"]) == {"yaw", "pitch", "roll", "overall"}
    assert set(doc["maev"]) == {"left", "down", "front", "overall"}
    assert set(doc["bins"][0]) == {"angle", "lo", "hi", "count", "mae"}
    lines = rep.to_table().splitlines()
    assert lines[0].split() == list(TABLE_COLUMNS)
    table = [float(v) for v in lines[1].split()]
    json_vals = [doc["mae"][k] for k in ("yaw", "pitch", "roll", "overall")] + \
                [doc["maev"][k] for k in ("left", "down", "front", "overall")]
    assert table == [round(v, 2) for v in json_vals]


def test_evaluate_row_order_invariant(rng):
    mats = random_rotations(rng, 50)
    noisy = [m @ euler_to_matrix(rng.normal(0, 3, 3)) for m in mats]
    ids = [f"r{i}" for i in range(50)]
    gt = PoseSet.from_matrices(zip(ids, mats))
    order = rng.permutation(50)
    pred_a = PoseSet.from_matrices(zip(ids, noisy))
    pred_b = PoseSet.from_matrices(((ids[k], noisy[k]) for k in order))
    assert evaluate(gt, pred_a).to_dict() == evaluate(gt, pred_b).to_dict()
