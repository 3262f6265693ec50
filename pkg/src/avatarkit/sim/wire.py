"""Binary payloads for the stack's bus topics (little-endian structs)."""

from __future__ import annotations

import struct

import numpy as np

from ..bus.latency import LatencyStats
from ..locomotion.footsteps import WalkingCommand

WALK_TAG = "walking-cmd"
POSTURE_TAG = "posture-ref"
FINGERS_TAG = "fingers-ref"
HEAD_TAG = "head-ref"
FACE_TAG = "face-cmd"
JOINTS_TAG = "joints-state"
DIAG_TAG = "locomotion-diag"
LATENCY_TAG = "latency-stats"

_WALK = struct.Struct("<dd")
_LAT = struct.Struct("<Idddd")


def pack_walk(cmd: WalkingCommand) -> bytes:
    return _WALK.pack(cmd.heading, cmd.speed)


def unpack_walk(payload: bytes) -> WalkingCommand:
    heading, speed = _WALK.unpack(payload)
    return WalkingCommand(heading, speed)


def pack_vector(values) -> bytes:
    arr = np.asarray(values, dtype="<f8")
    return struct.pack("<H", arr.shape[0]) + arr.tobytes()


def unpack_vector(payload: bytes) -> np.ndarray:
    (n,) = struct.unpack_from("<H", payload, 0)
    return np.frombuffer(payload, dtype="<f8", count=n, offset=2).copy()


def pack_face(pattern: int) -> bytes:
    return struct.pack("<B", pattern)


def unpack_face(payload: bytes) -> int:
    return struct.unpack("<B", payload)[0]


def pack_joints_state(t: float, q, base_xyz, base_quat, contacts: dict) -> bytes:
    head = struct.pack("<d", t)
    flags = struct.pack("<BB", int(contacts.get("left", True)), int(contacts.get("right", True)))
    return head + pack_vector(q) + pack_vector(list(base_xyz) + list(base_quat)) + flags


def unpack_joints_state(payload: bytes) -> dict:
    (t,) = struct.unpack_from("<d", payload, 0)
    off = 8
    (n,) = struct.unpack_from("<H", payload, off)
    q = np.frombuffer(payload, dtype="<f8", count=n, offset=off + 2).copy()
    off += 2 + 8 * n
    (m,) = struct.unpack_from("<H", payload, off)
    pose = np.frombuffer(payload, dtype="<f8", count=m, offset=off + 2).copy()
    off += 2 + 8 * m
    left, right = struct.unpack_from("<BB", payload, off)
    return {
        "t": t,
        "q": q,
        "base_xyz": pose[:3],
        "base_quat": pose[3:7],
        "contacts": {"left": bool(left), "right": bool(right)},
    }


def pack_latency(stats: LatencyStats) -> bytes:
    return _LAT.pack(stats.samples, stats.mean_ms, stats.p95_ms, stats.max_ms, stats.window_s)


def unpack_latency(payload: bytes) -> LatencyStats:
    samples, mean, p95, mx, window = _LAT.unpack(payload)
    return LatencyStats(samples, mean, p95, mx, window)


def diag_to_text(diag: dict) -> str:
    """One diagnostics record as a key=value line (offline-plotting form)."""
    parts = []
    cmd = diag.get("command")
    if cmd is not None:
        parts.append(f"cmd_heading={cmd.heading!r}")
        parts.append(f"cmd_speed={cmd.speed!r}")
    for key in (
        "t",
        "stance",
        "zmp_ref",
        "zmp_cmd",
        "zmp_meas",
        "dcm_ref",
        "dcm_meas",
        "com_ref",
        "zmp_margin",
        "high_residual",
        "qp_iterations",
    ):
        value = diag.get(key)
        if value is None:
            parts.append(f"{key}=nan")
        elif isinstance(value, np.ndarray):
            parts.append(f"{key}={','.join(repr(float(v)) for v in value)}")
        elif isinstance(value, str):
            parts.append(f"{key}={value}")
        else:
            parts.append(f"{key}={float(value)!r}")
    return " ".join(parts)


def text_to_diag(line: str) -> dict:
    out: dict = {}
    for part in line.strip().split(" "):
        key, value = part.split("=", 1)
        if key == "stance":
            out[key] = value
        elif "," in value:
            out[key] = np.array([float(v) for v in value.split(",")])
        else:
            out[key] = float(value)
    return out
