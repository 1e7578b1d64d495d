import math

import numpy as np
import pytest

import toolpose as tp


def test_render_and_total_variation():
    maps = tp.render_targets([{"head": (50.0, 70.0)}], 100, 120, tp.Skeleton(["head"], []), sigma=20.0)
    assert maps.shape == (100, 120, 1)
    assert maps[70, 50, 0] == pytest.approx(1.0)
    assert maps[70, 70, 0] == pytest.approx(math.exp(-0.5))
    total, per_channel = tp.total_variation(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert total == 2.0
    assert per_channel == [2.0]


def test_decode_round_trip():
    sk = tp.Skeleton.endovis()
    scene = tp.generate_scene(seed=4, instruments=2)
    maps = tp.render_targets(scene, 256, 320, sk)
    assert maps.shape == (256, 320, len(sk.channel_names))
    poses, confidence = tp.parse_instruments(maps, sk)
    assert len(poses) == 2
    assert confidence["total"] > 1000.0
    assert not confidence["boosted"]
    for truth in scene:
        best = min(
            max(math.dist(pose["joints"][name][:2], xy) for name, xy in truth.items())
            for pose in poses
        )
        assert best <= 1.0


def test_assignment_and_matching():
    assert tp.min_cost_assignment(np.array([[4.0, 1.0], [2.0, 8.0]])) == [1, 0]
    pairs = tp.max_score_matching(np.array([[0.9, 0.8], [0.85, 0.2]]), 0.5)
    assert sum(s for _, _, s in pairs) == pytest.approx(1.65)
    matched, up, ug = tp.match_detections(np.array([[0.0, 0.0]]), np.array([[25.0, 0.0]]))
    assert matched == [] and up == [0] and ug == [0]


def test_gate_is_inclusive():
    assert tp.gate_tv_total(1000.0, "multi") == (True, 1000.0, 1000.0)
    assert tp.gate_tv_total(399.0, "single")[0] is False
    with pytest.raises(tp.InvalidInput):
        tp.gate_tv_total(1.0, "both")


def test_augmentation():
    rng = np.random.default_rng(0)
    maps = rng.random((12, 17, 3))
    assert np.array_equal(tp.flip_h(tp.flip_h(maps)), maps)
    assert tp.bbox_from_joints(np.array([[10.0, 20.0], [30.0, 40.0], [20.0, 10.0]])) == (-20.0, -20.0, 60.0, 70.0)
    plan = tp.plan_swap(100, 70.0, 20.0)
    assert (plan["crop_left"], plan["crop_right"], plan["pad"]) == (25, 25, 0)
    assert tp.mirror_joint_name("left_clasper") == "right_clasper"


def test_nn_kernels():
    x = np.random.default_rng(1).normal(size=(1, 3, 3, 4))
    y = tp.group_norm(x, np.ones(4), np.zeros(4), groups=2)
    assert y.shape == x.shape
    assert abs(y[..., :2].mean()) < 1e-12
    assert np.allclose(tp.attention_gate(x, np.zeros((1, 3, 3, 1))), 0.5 * x)
    out = tp.rlrelu(np.array([[[[-1.0, 2.0]]]]))
    assert out[0, 0, 0, 1] == 2.0
    assert out[0, 0, 0, 0] == pytest.approx(-(1 / 8 + 1 / 3) / 2)


def test_hmap_io_and_errors(tmp_path):
    path = str(tmp_path / "m.hmap")
    maps = np.arange(24, dtype=float).reshape(2, 3, 4)
    tp.write_hmap(path, maps, ["a", "b", "c", "d"])
    back, names = tp.read_hmap(path)
    assert np.array_equal(back, maps)
    assert names == ["a", "b", "c", "d"]
    (tmp_path / "bad.hmap").write_bytes(b"HMAP1\n\x02")
    with pytest.raises(tp.FormatError, match="bad.hmap:7: truncated height"):
        tp.read_hmap(str(tmp_path / "bad.hmap"))


def test_cli_in_process(tmp_path):
    code, out, err = tp.run_cli(["--seed", "2", "synth", "--out-dir", str(tmp_path), "--frames", "1"])
    assert code == 0, err
    code, out, err = tp.run_cli(["tv", str(tmp_path / "frame_0000.hmap")])
    assert code == 0
    assert out.startswith("frame=frame_0000 total=")
    assert '"sigma": 20.0' in tp.default_config("endovis")
