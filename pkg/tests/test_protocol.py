import base64
import json
import os
import subprocess
import sys
import threading

import numpy as np
import pytest

from aerialpush.agents import HOVER, ScriptedPolicy
from aerialpush.batch import BatchConfig, BatchEnv
from aerialpush.observation import Observation
from aerialpush.protocol import ProtocolClient, Session, serve_tcp
from aerialpush.render import CameraModel, depth_from_bytes


def _hover(n):
    return [list(HOVER)] * n


def _req(session, payload):
    return json.loads(session.handle_line(json.dumps(payload)))


def test_reset_then_hover_step():
    s = Session(BatchConfig(n_envs=32))
    r = _req(s, {"cmd": "reset", "seed": 7})
    assert r["ok"] and r["n_envs"] == 32 and len(r["envs"]) == 32
    assert len(r["envs"][0]["obs"]) == 16
    st = _req(s, {"cmd": "step", "actions": _hover(32)})
    assert st["ok"] and len(st["transitions"]) == 32
    for i, t in enumerate(st["transitions"]):
        assert t["env"] == i and not t["done"] and not t["completed"] and t["reset_reason"] is None
        tm = t["terms"]
        nav = tm["nav_xy_term"] * (1 + tm["tilt_factor"]) + tm["nav_z_term"]
        assert t["reward"] == tm["total"] == pytest.approx(nav + tm["progress_term"] + tm["completion_term"])


def test_malformed_line_then_recovery():
    s = Session(BatchConfig(n_envs=2))
    bad = json.loads(s.handle_line("{not json"))
    assert bad == {"ok": False, "error": {"code": "parse_error", "message": bad["error"]["message"]}}
    assert _req(s, {"cmd": "dance"})["error"]["code"] == "unknown_cmd"
    assert _req(s, [1, 2])["error"]["code"] == "bad_request"
    assert _req(s, {"cmd": "reset"})["ok"]
    assert _req(s, {"cmd": "step", "actions": _hover(2)})["ok"]


def test_step_before_reset():
    s = Session(BatchConfig(n_envs=2))
    assert _req(s, {"cmd": "step", "actions": _hover(2)})["error"]["code"] == "not_reset"


def test_bad_action_names_env():
    s = Session(BatchConfig(n_envs=4))
    _req(s, {"cmd": "reset"})
    r = _req(s, {"cmd": "step", "actions": [list(HOVER), [0, 0, 0], list(HOVER), list(HOVER)]})
    assert r["error"]["code"] == "bad_action" and r["error"]["env"] == 1
    r = _req(s, {"cmd": "step", "actions": [list(HOVER), list(HOVER), [0, 0, "x", 0], list(HOVER)]})
    assert r["error"]["env"] == 2
    assert _req(s, {"cmd": "step", "actions": _hover(3)})["error"]["code"] == "bad_actions"
    assert _req(s, {"cmd": "reset", "seed": -1})["error"]["code"] == "bad_seed"
    # nothing was stepped by the rejected requests
    assert _req(s, {"cmd": "step", "actions": _hover(4)})["ok"]


def _transcript(n_steps=15):
    s = Session(BatchConfig(n_envs=4))
    lines = [json.dumps({"cmd": "reset", "seed": 3})]
    out = [s.handle_line(lines[0])]
    rng = np.random.default_rng(0)
    for _ in range(n_steps):
        line = json.dumps({"cmd": "step", "actions": rng.uniform(-1, 1, (4, 4)).tolist()})
        lines.append(line)
        out.append(s.handle_line(line))
    return lines, out


def test_transcript_replays_byte_for_byte():
    lines, out = _transcript()
    s = Session(BatchConfig(n_envs=4))
    assert [s.handle_line(ln) for ln in lines] == out


def _scripted_in_process(n_envs, seed, steps):
    policies = [ScriptedPolicy() for _ in range(n_envs)]
    obs_log = []
    with BatchEnv(BatchConfig(n_envs=n_envs, base_seed=seed)) as env:
        obs = env.reset()
        obs_log.append([o.to_vector() for o in obs])
        for _ in range(steps):
            actions = [p(o) for p, o in zip(policies, obs)]
            obs = [t.observation for t in env.step(actions)]
            obs_log.append([o.to_vector() for o in obs])
    return np.array(obs_log)


def _scripted_remote(client, n_envs, seed, steps):
    policies = [ScriptedPolicy() for _ in range(n_envs)]
    r = client.reset(seed)
    obs = [np.array(e["obs"]) for e in r["envs"]]
    obs_log = [obs]
    for _ in range(steps):
        actions = [p(Observation.from_vector(o)) for p, o in zip(policies, obs)]
        obs = [np.array(t["obs"]) for t in client.step(actions)["transitions"]]
        obs_log.append(obs)
    assert client.close()["ok"]
    return np.array(obs_log)


def test_stdio_matches_in_process():
    expected = _scripted_in_process(4, 5, 30)
    proc = subprocess.Popen(
        [sys.executable, "-m", "aerialpush", "serve", "--n-envs", "4"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
    )
    try:
        got = _scripted_remote(ProtocolClient(proc.stdout, proc.stdin), 4, 5, 30)
    finally:
        proc.stdin.close()
        assert proc.wait(timeout=60) == 0
    np.testing.assert_array_equal(got, expected)


def test_tcp_matches_in_process():
    expected = _scripted_in_process(4, 5, 30)
    bound = []
    ready = threading.Event()
    th = threading.Thread(
        target=serve_tcp, args=("127.0.0.1", 0, BatchConfig(n_envs=4)),
        kwargs={"once": True, "ready": lambda addr: (bound.append(addr), ready.set())}, daemon=True,
    )
    th.start()
    assert ready.wait(10)
    got = _scripted_remote(ProtocolClient.connect(*bound[0]), 4, 5, 30)
    th.join(10)
    np.testing.assert_array_equal(got, expected)


def test_base64_depth_frames():
    cam = CameraModel()
    s = Session(BatchConfig(n_envs=2, camera=cam), depth="base64")
    r = _req(s, {"cmd": "reset"})
    depth, near, far = depth_from_bytes(base64.b64decode(r["envs"][0]["depth"]))
    assert depth.shape == (cam.height, cam.width) and (near, far) == (cam.near, cam.far)
    assert np.all((depth >= cam.near) & (depth <= cam.far))


def test_file_depth_frames(tmp_path):
    s = Session(BatchConfig(n_envs=1, camera=CameraModel()), depth="file", depth_dir=str(tmp_path))
    r = _req(s, {"cmd": "reset"})
    path = r["envs"][0]["depth"]
    assert os.path.dirname(path) == str(tmp_path)
    st = _req(s, {"cmd": "step", "actions": _hover(1)})
    assert st["transitions"][0]["depth"] != path and len(os.listdir(tmp_path)) == 2


def test_session_validation():
    with pytest.raises(ValueError):
        Session(depth="png")
    with pytest.raises(ValueError):
        Session(BatchConfig(), depth="base64")
    with pytest.raises(ValueError):
        Session(BatchConfig(camera=CameraModel()), depth="file")
