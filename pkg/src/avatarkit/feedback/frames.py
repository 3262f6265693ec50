"""Camera frame stream pacing and the scene-descriptor payload.

Visual feedback is a rendered scene descriptor (camera pose + posed object
list), not pixels; the pacer decimates any source rate to at most 15 fps
with newest-frame-wins semantics (stale frames are dropped, never queued).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

FRAME_TAG = "camera-frame"
FRAME_RESOLUTION = (1024, 768)

_HEAD = struct.Struct("<dHH7f")  # timestamp, width, height, camera pose (xyz + wxyz)
_OBJ = struct.Struct("<H7f")


@dataclass(frozen=True)
class SceneObject:
    object_id: int
    position: tuple
    orientation: tuple = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FrameDescriptor:
    timestamp: float
    camera_position: tuple
    camera_orientation: tuple  # quaternion (w, x, y, z)
    objects: tuple = ()
    resolution: tuple = FRAME_RESOLUTION


def pack_frame(frame: FrameDescriptor) -> bytes:
    head = _HEAD.pack(
        frame.timestamp,
        frame.resolution[0],
        frame.resolution[1],
        *frame.camera_position,
        *frame.camera_orientation,
    )
    body = b"".join(
        _OBJ.pack(o.object_id, *o.position, *o.orientation) for o in frame.objects
    )
    return head + struct.pack("<H", len(frame.objects)) + body


def unpack_frame(payload: bytes) -> FrameDescriptor:
    fields = _HEAD.unpack_from(payload, 0)
    t, w, h = fields[0], fields[1], fields[2]
    cam_pos = fields[3:6]
    cam_q = fields[6:10]
    off = _HEAD.size
    (count,) = struct.unpack_from("<H", payload, off)
    off += 2
    objects = []
    for _ in range(count):
        o = _OBJ.unpack_from(payload, off)
        off += _OBJ.size
        objects.append(SceneObject(o[0], o[1:4], o[4:8]))
    return FrameDescriptor(t, cam_pos, cam_q, tuple(objects), (w, h))


class FramePacer:
    """Rate limiter: emits at most ``rate_fps`` frames, newest wins.

    ``offer`` returns the frame when it should be forwarded, else None.
    A small pacing slack (5%) absorbs scheduler jitter, mirroring the
    inter-frame-interval invariant.
    """

    def __init__(self, rate_fps: float = 15.0, slack: float = 0.05):
        self.min_interval = (1.0 / rate_fps) * (1.0 - slack)
        self._last_emit: float | None = None
        self.delivered = 0
        self.dropped = 0

    def offer(self, frame, now: float):
        if self._last_emit is not None and now - self._last_emit < self.min_interval:
            self.dropped += 1
            return None
        self._last_emit = now
        self.delivered += 1
        return frame


@dataclass
class LatestFrameCell:
    """Newest-wins mailbox between producer and pacer."""

    frame: object = None
    updated_at: float = field(default=0.0)

    def put(self, frame, now: float) -> None:
        self.frame = frame
        self.updated_at = now

    def take(self):
        frame, self.frame = self.frame, None
        return frame
