import struct
import zlib
from pathlib import Path

import numpy as np
import pytest

import mmteleop

DATA = Path(__file__).resolve().parents[2] / "data"


def test_crc_and_frame_layout():
    payload = b"\x01\x02\x03hello"
    assert mmteleop.crc32(payload) == zlib.crc32(payload)
    frame = mmteleop.encode_frame(mmteleop.MESSAGE_TYPES["heartbeat"], payload)
    assert frame[:8] == b"TM\x01\x02" + struct.pack("<I", len(payload))
    assert frame[8:-4] == payload
    assert struct.unpack("<I", frame[-4:])[0] == zlib.crc32(payload)
    assert mmteleop.decode_frame(frame) == (2, payload, len(frame))
    assert mmteleop.decode_frame(frame[:5]) is None
    bad = bytearray(frame)
    bad[9] ^= 1
    with pytest.raises(mmteleop.IntegrityError):
        mmteleop.decode_frame(bytes(bad))


def test_action_vector_layout():
    cmd = {
        "left_arm": ((0.1, 0.2, 0.3), (0, 0, 0.5)),
        "left_gripper": 1.0,
        "right_arm": ((-0.1, 0, 0.05), (0, 0, 0)),
        "right_gripper": 0.25,
        "base": (0.5, 0, 0.2),
    }
    v = mmteleop.flatten(cmd)
    expected = [0.1, 0.2, 0.3, 0, 0, 0.5, 1.0, -0.1, 0, 0.05, 0, 0, 0, 0.25, 0.5, 0, 0.2]
    assert v.tobytes() == struct.pack("<17f", *expected)
    back = mmteleop.unflatten(list(v))
    assert np.allclose(back["base"], (0.5, 0, 0.2), atol=1e-7)
    assert "torso" not in back


def test_action_payload_round_trip():
    cmd = {"base": (0.25, 0.0, -0.5), "torso": 0.75, "right_gripper": 1.0, "source": "kb", "timestamp_us": 42}
    d = mmteleop.decode_action(mmteleop.encode_action(cmd))
    assert d["timestamp_us"] == 42
    assert d["base"] == (0.25, 0.0, -0.5)
    assert d["torso"] == 0.75
    assert d["sources"] == {"right_gripper": "kb", "base": "kb", "torso": "kb"}
    assert "left_arm" not in d


def test_jacobian_matches_numpy_finite_differences():
    emb = mmteleop.Embodiment.load(str(DATA / "embodiments/tiago_like.yaml"))
    assert emb.arms == ["left", "right"]
    lo, hi = emb.limits("right")
    rng = np.random.default_rng(5)
    for _ in range(10):
        q = rng.uniform(lo + 0.01, hi - 0.01)
        J = emb.jacobian("right", q)
        h = 1e-6
        for k in range(len(q)):
            dq = np.zeros_like(q)
            dq[k] = h
            pp, _ = emb.forward_kinematics("right", q + dq)
            pm, _ = emb.forward_kinematics("right", q - dq)
            assert np.allclose(J[:3, k], (pp - pm) / (2 * h), atol=1e-6)


def test_dls_matches_closed_form():
    rng = np.random.default_rng(6)
    J = rng.normal(size=(6, 7))
    dx = rng.normal(size=6)
    lam = 0.05
    expected = J.T @ np.linalg.solve(J @ J.T + lam**2 * np.eye(6), dx)
    assert np.allclose(mmteleop.damped_least_squares(J, dx, lam), expected, atol=1e-10)


def test_local_session_records_and_replays(tmp_path):
    ep = tmp_path / "run.tmep"
    report = mmteleop.run_local(DATA / "sessions/keyboard_pick_pot.yaml", record=ep)
    assert report["success"]
    info = mmteleop.load_episode(str(ep))
    assert info["ticks"] == report["ticks"]
    assert info["actions"].shape == (report["ticks"], 17)
    result = mmteleop.replay(str(ep))
    assert result["matches"]
    assert result["first_divergent_tick"] is None
    assert result["final_hash"] == info["final_hash"]


def test_config_errors_raise():
    with pytest.raises(mmteleop.ConfigError):
        mmteleop.Embodiment.parse("name: x\narms: {}\n")
