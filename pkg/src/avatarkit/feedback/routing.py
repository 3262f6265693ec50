"""Feedback routing: avatar measurements to operator devices.

Skin touches become body haptic vibrations on the matching operator node;
fingertip contact forces become glove brake/vibration commands; latency
stats become an operator display record with the 25 ms alarm.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..bus.latency import LatencyStats
from ..config import FeedbackConfig
from ..model.robot import SKIN_PATCHES


class UnmappedPatch(KeyError):
    pass


class UnknownPatch(KeyError):
    pass


@dataclass(frozen=True)
class SkinEvent:
    patch: str
    taxels: frozenset
    intensity: float
    timestamp: float

    def __post_init__(self):
        if self.patch not in SKIN_PATCHES:
            raise UnknownPatch(self.patch)
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError("intensity must be in [0, 1]")
        if (self.intensity > 0) != bool(self.taxels):
            raise ValueError("intensity must be > 0 iff taxels are active")


@dataclass(frozen=True)
class HapticCommand:
    node: str
    amplitude: float
    duration_ms: float

    def __post_init__(self):
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError("amplitude must be in [0, 1]")
        if self.duration_ms < 50.0:
            raise ValueError("haptic pulses are at least 50 ms")


@dataclass(frozen=True)
class FingerFeedback:
    brake_force_n: np.ndarray  # per finger, [0, 20]
    vibration: np.ndarray  # per finger, [0, 1]


# Default patch -> operator haptic node table (identity left/right).
DEFAULT_HAPTIC_MAPPING = {
    "left_upper_arm": "operator_left_arm",
    "right_upper_arm": "operator_right_arm",
    "left_hand": "operator_left_hand",
    "right_hand": "operator_right_hand",
}


def route_skin_to_haptics(
    event: SkinEvent,
    mapping: dict[str, str] | None = None,
    cfg: FeedbackConfig | None = None,
) -> HapticCommand | None:
    """Map one skin event to a haptic pulse; silent events route nowhere."""
    mapping = DEFAULT_HAPTIC_MAPPING if mapping is None else mapping
    if event.intensity <= 0.0:
        return None
    if event.patch not in mapping:
        raise UnmappedPatch(event.patch)
    duration = cfg.haptic_min_duration_ms if cfg is not None else 50.0
    return HapticCommand(mapping[event.patch], event.intensity, max(duration, 50.0))


def compute_finger_feedback(forces_n, brake_max: float = 20.0, vibe_scale: float = 5.0) -> FingerFeedback:
    """Brake clips at the glove's 20 N passive limit; vibration saturates at
    ``vibe_scale`` newtons for contact-onset cueing."""
    f = np.asarray(forces_n, dtype=float)
    if np.any(f < 0):
        raise ValueError("contact forces must be >= 0")
    return FingerFeedback(np.minimum(f, brake_max), np.minimum(f / vibe_scale, 1.0))


def latency_readout(stats: LatencyStats | None, alarm_ms: float = 25.0) -> dict:
    if stats is None or stats.samples == 0:
        return {"status": "no data"}
    return {
        "status": "ok",
        "mean_ms": stats.mean_ms,
        "p95_ms": stats.p95_ms,
        "alarm": stats.p95_ms > alarm_ms,
    }


# -- wire payloads ------------------------------------------------------------

_SKIN_HEAD = struct.Struct("<BdH")
_HAPTIC = struct.Struct("<Bdd")

SKIN_TAG = "skin-event"
HAPTIC_TAG = "haptic-cmd"
GLOVE_TAG = "glove-feedback"

_PATCH_CODE = {name: i for i, name in enumerate(SKIN_PATCHES)}
_NODE_CODE = {name: i for i, name in enumerate(sorted(set(DEFAULT_HAPTIC_MAPPING.values())))}
_CODE_NODE = {i: name for name, i in _NODE_CODE.items()}


def pack_skin_event(event: SkinEvent) -> bytes:
    taxels = sorted(event.taxels)
    head = _SKIN_HEAD.pack(_PATCH_CODE[event.patch], event.intensity, len(taxels))
    return head + struct.pack(f"<{len(taxels)}H", *taxels) + struct.pack("<d", event.timestamp)


def unpack_skin_event(payload: bytes) -> SkinEvent:
    patch_code, intensity, n = _SKIN_HEAD.unpack_from(payload, 0)
    off = _SKIN_HEAD.size
    taxels = struct.unpack_from(f"<{n}H", payload, off)
    off += 2 * n
    (timestamp,) = struct.unpack_from("<d", payload, off)
    return SkinEvent(SKIN_PATCHES[patch_code], frozenset(taxels), intensity, timestamp)


def pack_haptic(cmd: HapticCommand) -> bytes:
    return _HAPTIC.pack(_NODE_CODE[cmd.node], cmd.amplitude, cmd.duration_ms)


def unpack_haptic(payload: bytes) -> HapticCommand:
    code, amplitude, duration = _HAPTIC.unpack(payload)
    return HapticCommand(_CODE_NODE[code], amplitude, duration)
