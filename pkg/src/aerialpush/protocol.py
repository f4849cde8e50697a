"""Newline-delimited JSON session so external agents can drive a batch of environments.

Requests, one JSON object per line::

    {"cmd": "reset", "seed": 7}
    {"cmd": "step", "actions": [[a1, a2, a3, a4], ...]}
    {"cmd": "close"}

Every request gets exactly one response line.  Failures answer
``{"ok": false, "error": {"code": ..., "message": ...}}`` (plus ``"env"``
when a single environment's action is at fault) and the session continues.
Floats are written with ``repr`` precision, so a transcript replays
byte-for-byte.
"""

import base64
import json
import os
import socket
import sys
from dataclasses import replace

import numpy as np

from .batch import BatchConfig, BatchEnv
from .render import depth_to_bytes

DEPTH_MODES = ("none", "base64", "file")


class ProtocolError(Exception):
    def __init__(self, code, message, env=None):
        super().__init__(message)
        self.code = code
        self.env = env

    def payload(self):
        err = {"code": self.code, "message": str(self)}
        if self.env is not None:
            err["env"] = self.env
        return {"ok": False, "error": err}


def _stats_dict(stats):
    return {
        "goals_completed": stats.goals_completed,
        "steps": stats.steps,
        "total_reward": float(stats.total_reward),
        "reset_reason": stats.reset_reason.value if stats.reset_reason else None,
        "collided": bool(stats.collided),
    }


class Session:
    """Request handler over a :class:`BatchEnv`; transport agnostic."""

    def __init__(self, cfg=None, depth="none", depth_dir=None):
        if depth not in DEPTH_MODES:
            raise ValueError(f"depth must be one of {DEPTH_MODES}")
        if depth == "file" and not depth_dir:
            raise ValueError("file depth mode needs depth_dir")
        if depth != "none" and (cfg is None or cfg.camera is None):
            raise ValueError("depth output needs a camera in the batch config")
        self.cfg = cfg or BatchConfig()
        self.depth = depth
        self.depth_dir = depth_dir
        self.env = None
        self.closed = False
        self._frame = 0

    # -- encoding ---------------------------------------------------------

    def _depth_field(self, obs, i):
        cam = self.cfg.camera
        blob = depth_to_bytes(obs.depth, cam.near, cam.far)
        if self.depth == "base64":
            return base64.b64encode(blob).decode("ascii")
        path = os.path.join(self.depth_dir, f"depth_{self._frame:08d}_{i:04d}.bin")
        with open(path, "wb") as fh:
            fh.write(blob)
        return path

    def _obs(self, obs, i):
        out = {"obs": obs.to_vector().tolist()}
        if self.depth != "none":
            out["depth"] = self._depth_field(obs, i)
        return out

    # -- commands ---------------------------------------------------------

    def _reset(self, req):
        seed = req.get("seed", self.cfg.base_seed)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ProtocolError("bad_seed", "seed must be a non-negative integer")
        if self.env is not None:
            self.env.close()
        self.env = BatchEnv(replace(self.cfg, base_seed=seed))
        obs = self.env.reset()
        self._frame += 1
        envs = [{"env": i, "friction": mu, **self._obs(o, i)} for i, (mu, o) in enumerate(zip(self.env.frictions, obs))]
        return {"ok": True, "cmd": "reset", "n_envs": self.env.n_envs, "envs": envs}

    def _actions(self, req):
        actions = req.get("actions")
        n = self.cfg.n_envs
        if not isinstance(actions, list) or len(actions) != n:
            raise ProtocolError("bad_actions", f"expected a list of {n} actions")
        for i, a in enumerate(actions):
            if not isinstance(a, list) or len(a) != 4:
                raise ProtocolError("bad_action", f"env {i}: action must have 4 components", env=i)
            for x in a:
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
                    raise ProtocolError("bad_action", f"env {i}: action components must be finite numbers", env=i)
        return np.array(actions, dtype=float)

    def _step(self, req):
        if self.env is None:
            raise ProtocolError("not_reset", "send reset before step")
        actions = self._actions(req)
        transitions = self.env.step(actions)
        self._frame += 1
        out = []
        for t in transitions:
            rec = {
                "env": t.env_index,
                **self._obs(t.observation, t.env_index),
                "reward": float(t.reward.total),
                "terms": {k: float(v) for k, v in t.reward.as_dict().items()},
                "done": bool(t.done),
                "completed": bool(t.info["completed"]),
                "reset_reason": t.reset_reason.value if t.reset_reason else None,
            }
            if t.done:
                rec["stats"] = _stats_dict(t.stats)
            out.append(rec)
        return {"ok": True, "cmd": "step", "transitions": out}

    def handle(self, req):
        if not isinstance(req, dict):
            raise ProtocolError("bad_request", "request must be a JSON object")
        cmd = req.get("cmd")
        if cmd == "reset":
            return self._reset(req)
        if cmd == "step":
            return self._step(req)
        if cmd == "close":
            self.close()
            return {"ok": True, "cmd": "close"}
        raise ProtocolError("unknown_cmd", f"unknown command {cmd!r}")

    def handle_line(self, line):
        """One request line in, one response line out (without the newline)."""
        try:
            try:
                req = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolError("parse_error", f"malformed JSON: {exc.msg}") from None
            resp = self.handle(req)
        except ProtocolError as exc:
            resp = exc.payload()
        return json.dumps(resp, separators=(",", ":"))

    def close(self):
        if self.env is not None:
            self.env.close()
        self.closed = True


def serve_stream(session, reader, writer):
    """Alternate request and response lines until ``close`` or end of input."""
    for line in reader:
        if not line.strip():
            continue
        writer.write(session.handle_line(line) + "\n")
        writer.flush()
        if session.closed:
            break
    session.close()


def serve_stdio(cfg=None, depth="none", depth_dir=None):
    serve_stream(Session(cfg, depth, depth_dir), sys.stdin, sys.stdout)


def serve_tcp(host, port, cfg=None, depth="none", depth_dir=None, once=False, ready=None):
    """Serve one client at a time on a TCP socket; each connection is a fresh session.

    ``ready`` is called with the bound ``(host, port)`` once listening.
    """
    with socket.create_server((host, port)) as srv:
        if ready is not None:
            ready(srv.getsockname()[:2])
        while True:
            conn, _ = srv.accept()
            with conn, conn.makefile("r", encoding="utf-8") as rf, conn.makefile("w", encoding="utf-8") as wf:
                serve_stream(Session(cfg, depth, depth_dir), rf, wf)
            if once:
                return


class ProtocolClient:
    """Minimal client over a pair of text streams (a subprocess's pipes or a socket file)."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    @classmethod
    def connect(cls, host, port):
        sock = socket.create_connection((host, port))
        client = cls(sock.makefile("r", encoding="utf-8"), sock.makefile("w", encoding="utf-8"))
        client._sock = sock
        return client

    def request(self, payload):
        self.writer.write(json.dumps(payload) + "\n")
        self.writer.flush()
        line = self.reader.readline()
        if not line:
            raise ConnectionError("server closed the session")
        return json.loads(line)

    def reset(self, seed=0):
        return self.request({"cmd": "reset", "seed": seed})

    def step(self, actions):
        return self.request({"cmd": "step", "actions": np.asarray(actions, dtype=float).tolist()})

    def close(self):
        try:
            return self.request({"cmd": "close"})
        finally:
            sock = getattr(self, "_sock", None)
            if sock is not None:
                sock.close()
