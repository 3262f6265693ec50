"""Operator session recording: one timestamped text line per frame,
replayable bit-exactly (floats serialized with repr round-tripping)."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .frames import NODE_NAMES, OperatorFrame

_NODE_KEYS = {name: name for name in NODE_NAMES}


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in np.atleast_1d(values))


def _parse(text: str) -> np.ndarray:
    return np.array([float(p) for p in text.split(",")])


def frame_to_line(frame: OperatorFrame) -> str:
    parts = [f"t={frame.timestamp!r}"]
    for name in NODE_NAMES:
        parts.append(f"{name}={_fmt(frame.node_orientations[name])}")
    parts.append(f"headp={_fmt(frame.head_position)}")
    parts.append(f"headq={_fmt(frame.head_orientation)}")
    parts.append(f"gaze={_fmt(frame.gaze)}")
    parts.append(f"eye={frame.eye_openness!r}")
    parts.append(f"lfing={_fmt(frame.finger_flexions['left'])}")
    parts.append(f"rfing={_fmt(frame.finger_flexions['right'])}")
    parts.append(f"tread={_fmt([frame.treadmill_speed, frame.treadmill_heading])}")
    parts.append(f"expr={frame.expression}")
    return " ".join(parts)


def line_to_frame(line: str) -> OperatorFrame:
    fields = dict(part.split("=", 1) for part in line.strip().split(" "))
    tread = _parse(fields["tread"])
    return OperatorFrame(
        timestamp=float(fields["t"]),
        node_orientations={name: _parse(fields[name]) for name in NODE_NAMES},
        head_position=_parse(fields["headp"]),
        head_orientation=_parse(fields["headq"]),
        gaze=tuple(_parse(fields["gaze"])),
        eye_openness=float(fields["eye"]),
        finger_flexions={"left": _parse(fields["lfing"]), "right": _parse(fields["rfing"])},
        treadmill_speed=float(tread[0]),
        treadmill_heading=float(tread[1]),
        expression=fields["expr"],
    )


def record_session(frames: Iterable[OperatorFrame], path: str | Path) -> int:
    count = 0
    with open(path, "w") as fh:
        for frame in frames:
            fh.write(frame_to_line(frame) + "\n")
            count += 1
    return count


def replay_session(path: str | Path) -> Iterator[OperatorFrame]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                yield line_to_frame(line)
