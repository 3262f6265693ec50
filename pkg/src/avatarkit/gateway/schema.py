"""Gateway socket schema: newline-delimited JSON, versioned with ``v``.

Client to server:
    {"v":1,"type":"hello","role":"operator"|"recipient"|"observer"}
    {"v":1,"type":"cmd","kind":...,...}

Server to client:
    {"v":1,"type":"welcome","role":...,"limits":{...}}
    {"v":1,"type":"telemetry",...}   at 30 Hz
    {"v":1,"type":"error","message":...}

Command kinds and their role gates mirror the console: operators drive the
robot, recipients inject touches, observers only watch.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from ..model.robot import SKIN_PATCHES
from ..retargeting.frames import EXPRESSIONS
from ..sim.presets import ARM_POSE_PRESETS

SCHEMA_VERSION = 1

ROLES = ("operator", "recipient", "observer")

ROLE_COMMANDS = {
    "operator": {"walk", "arm_pose", "fingers", "face", "eyelids", "head"},
    "recipient": {"inject_touch"},
    "observer": set(),
}


class BadRole(ValueError):
    pass


class CommandRejected(ValueError):
    pass


def encode(message: dict) -> bytes:
    return (json.dumps(message, separators=(",", ":")) + "\n").encode()


def decode_line(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CommandRejected(f"malformed JSON: {exc}") from None
    if not isinstance(msg, dict) or msg.get("v") != SCHEMA_VERSION:
        raise CommandRejected("missing or unsupported schema version")
    return msg


def welcome(role: str, cfg, model) -> dict:
    """Handshake reply; carries the limits the console mirrors client-side."""
    return {
        "v": SCHEMA_VERSION,
        "type": "welcome",
        "role": role,
        "limits": {
            "v_max": cfg.locomotion.max_speed,
            "latency_alarm_ms": cfg.feedback.latency_alarm_ms,
            "patches": list(SKIN_PATCHES),
            "expressions": list(EXPRESSIONS),
            "presets": sorted(ARM_POSE_PRESETS),
            "neck_yaw": [
                model.limits_low[model.index_of("neck.neck_yaw")],
                model.limits_high[model.index_of("neck.neck_yaw")],
            ],
            "neck_pitch": [
                model.limits_low[model.index_of("neck.neck_pitch")],
                model.limits_high[model.index_of("neck.neck_pitch")],
            ],
        },
    }


def error(message: str) -> dict:
    return {"v": SCHEMA_VERSION, "type": "error", "message": message}


def validate_command(msg: dict, role: str, cfg, model) -> dict:
    """Role-gate and limit-check one command; raises on violation.

    Returns the validated command dict (normalized floats).
    """
    kind = msg.get("kind")
    if kind not in {k for kinds in ROLE_COMMANDS.values() for k in kinds}:
        raise CommandRejected(f"unknown command kind {kind!r}")
    if kind not in ROLE_COMMANDS[role]:
        raise BadRole(f"role {role!r} may not send {kind!r}")
    out: dict[str, Any] = {"kind": kind}
    if kind == "walk":
        heading = float(msg["heading"])
        speed = float(msg["speed"])
        if not math.isfinite(heading) or not math.isfinite(speed):
            raise CommandRejected("walk values must be finite")
        if not 0.0 <= speed <= cfg.locomotion.max_speed:
            raise CommandRejected(f"speed {speed} outside [0, {cfg.locomotion.max_speed}]")
        out.update(heading=heading, speed=speed)
    elif kind == "arm_pose":
        if "preset" in msg:
            if msg["preset"] not in ARM_POSE_PRESETS:
                raise CommandRejected(f"unknown preset {msg['preset']!r}")
            out["preset"] = msg["preset"]
        elif "deltas" in msg:
            deltas = {}
            for joint, value in msg["deltas"].items():
                try:
                    j = model.index_of(joint)
                except KeyError:
                    raise CommandRejected(f"unknown joint {joint!r}") from None
                v = float(value)
                if not model.limits_low[j] - 1e-12 <= v <= model.limits_high[j] + 1e-12:
                    raise CommandRejected(f"{joint}={v} outside limits")
                deltas[joint] = v
            out["deltas"] = deltas
        else:
            raise CommandRejected("arm_pose needs preset or deltas")
    elif kind == "fingers":
        for hand in ("left", "right"):
            flex = [float(v) for v in msg.get(hand, [0.0] * 5)]
            if len(flex) != 5 or any(not 0.0 <= v <= 1.0 for v in flex):
                raise CommandRejected(f"{hand} flexions must be 5 values in [0,1]")
            out[hand] = flex
    elif kind == "face":
        if msg.get("label") not in EXPRESSIONS:
            raise CommandRejected(f"unknown expression {msg.get('label')!r}")
        out["label"] = msg["label"]
    elif kind == "eyelids":
        openness = float(msg["openness"])
        if not 0.0 <= openness <= 1.0:
            raise CommandRejected("openness must be in [0,1]")
        out["openness"] = openness
    elif kind == "head":
        yaw = float(msg["yaw"])
        pitch = float(msg["pitch"])
        jy = model.index_of("neck.neck_yaw")
        jp = model.index_of("neck.neck_pitch")
        if not model.limits_low[jy] <= yaw <= model.limits_high[jy]:
            raise CommandRejected("head yaw outside neck limits")
        if not model.limits_low[jp] <= pitch <= model.limits_high[jp]:
            raise CommandRejected("head pitch outside neck limits")
        out.update(yaw=yaw, pitch=pitch)
    elif kind == "inject_touch":
        if msg.get("patch") not in SKIN_PATCHES:
            raise CommandRejected(f"unknown patch {msg.get('patch')!r}")
        intensity = float(msg["intensity"])
        if not 0.0 < intensity <= 1.0:
            raise CommandRejected("intensity must be in (0,1]")
        out.update(patch=msg["patch"], intensity=intensity)
    return out


def telemetry_from_caches(now: float, stack) -> dict:
    """Latest-value join over the operator-side caches; stale fields carry
    their age and never block the snapshot."""
    caches = stack.caches
    msg: dict[str, Any] = {
        "v": SCHEMA_VERSION,
        "type": "telemetry",
        "t": now,
        "stale": {},
    }

    def field(name: str, cache_key: str, build):
        cache = caches.get(cache_key)
        if cache is None or cache.value is None:
            msg[name] = None
            msg["stale"][name] = None
            return
        msg[name] = build(cache.value)
        msg["stale"][name] = round(cache.age(now), 3)

    from ..feedback.routing import unpack_skin_event
    from ..sim import wire

    field(
        "joints",
        "/operator/joints/state",
        lambda env: {
            k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in wire.unpack_joints_state(env.payload).items()
        },
    )
    field("diag", "/operator/diag", lambda env: _diag_json(env.payload))
    field(
        "skin",
        "/operator/skin/events",
        lambda env: _skin_json(unpack_skin_event(env.payload)),
    )
    field("face", "/operator/face/state", lambda env: wire.unpack_face(env.payload))
    field("frame", "/operator/camera/frames", lambda env: _frame_json(env.payload))
    if len(stack.probe.rtts_ms) >= 3:
        stats = stack.probe.stats(stack.cfg.feedback.latency_window_s)
        msg["latency"] = {
            "mean_ms": round(stats.mean_ms, 3),
            "p95_ms": round(stats.p95_ms, 3),
            "max_ms": round(stats.max_ms, 3),
            "alarm": stats.p95_ms > stack.cfg.feedback.latency_alarm_ms,
        }
    else:
        msg["latency"] = None
    msg["faults"] = len(stack.fault_log)
    msg["haptic_count"] = len(stack.haptic_log)
    # Commanded walk state as held by the pipeline (single-process observable;
    # the console round-trip check watches it).
    msg["pipeline_cmd"] = {
        "heading": stack.pipeline.command.heading,
        "speed": stack.pipeline.command.speed,
    }
    return msg


def _diag_json(payload: bytes) -> dict:
    from ..sim.wire import text_to_diag

    diag = text_to_diag(payload.decode())
    return {
        k: (v.tolist() if isinstance(v, np.ndarray) else v)
        for k, v in diag.items()
    }


def _skin_json(event) -> dict:
    return {
        "patch": event.patch,
        "intensity": event.intensity,
        "taxels": sorted(event.taxels),
        "timestamp": event.timestamp,
    }


def _frame_json(payload: bytes) -> dict:
    from ..feedback.frames import unpack_frame

    frame = unpack_frame(payload)
    return {
        "timestamp": frame.timestamp,
        "resolution": list(frame.resolution),
        "camera": {
            "position": [round(v, 4) for v in frame.camera_position],
            "orientation": [round(v, 5) for v in frame.camera_orientation],
        },
        "objects": [
            {
                "id": o.object_id,
                "position": [round(v, 4) for v in o.position],
                "orientation": [round(v, 5) for v in o.orientation],
            }
            for o in frame.objects
        ],
    }
