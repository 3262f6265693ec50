"""Operator-side input frames and calibration.

Five wearable nodes (chest, both upper arms, both forearms) deliver absolute
orientations; calibration captures an N-pose so that the calibration pose
maps exactly to the robot's zero posture.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model.rotations import log_so3, quat_to_mat

NODE_NAMES = ("chest", "left_upper_arm", "left_forearm", "right_upper_arm", "right_forearm")

EXPRESSIONS = ("neutral", "smile", "frown", "surprise", "eyes_closed")


class OperatorMoving(RuntimeError):
    pass


class UnknownExpression(KeyError):
    pass


def _check_unit(q: np.ndarray, what: str) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > 1e-6:
        raise ValueError(f"{what} quaternion is not unit-norm: {q}")
    return q


@dataclass
class OperatorFrame:
    """One tick of operator input. Quaternions are (w, x, y, z)."""

    timestamp: float
    node_orientations: dict[str, np.ndarray]
    head_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    head_orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    gaze: tuple = (0.0, 0.0, 0.0)  # version, vergence, tilt (rad)
    eye_openness: float = 1.0
    finger_flexions: dict[str, np.ndarray] = field(
        default_factory=lambda: {"left": np.zeros(5), "right": np.zeros(5)}
    )
    treadmill_speed: float = 0.0
    treadmill_heading: float = 0.0
    expression: str = "neutral"

    def __post_init__(self):
        for name in NODE_NAMES:
            if name not in self.node_orientations:
                raise ValueError(f"frame missing node {name!r}")
            self.node_orientations[name] = _check_unit(self.node_orientations[name], name)
        self.head_orientation = _check_unit(self.head_orientation, "head")
        self.eye_openness = float(np.clip(self.eye_openness, 0.0, 1.0))
        for hand in ("left", "right"):
            flex = np.asarray(self.finger_flexions[hand], dtype=float)
            if flex.shape != (5,):
                raise ValueError("finger flexions must have 5 entries per hand")
            self.finger_flexions[hand] = np.clip(flex, 0.0, 1.0)


def neutral_frame(t: float = 0.0) -> OperatorFrame:
    return OperatorFrame(
        timestamp=t,
        node_orientations={n: np.array([1.0, 0.0, 0.0, 0.0]) for n in NODE_NAMES},
    )


@dataclass(frozen=True)
class Calibration:
    """Per-node alignment rotations captured in the N-pose."""

    node_alignments: dict[str, np.ndarray]  # node -> 3x3, maps node to robot link
    chest_reference: np.ndarray  # 3x3
    head_reference: np.ndarray  # 3x3

    def aligned_relative(self, frame: OperatorFrame, node: str) -> np.ndarray:
        """Calibrated orientation of a node relative to the operator chest."""
        R_chest = quat_to_mat(frame.node_orientations["chest"])
        R_node = quat_to_mat(frame.node_orientations[node])
        return R_chest.T @ R_node @ self.node_alignments[node]

    def chest_relative(self, frame: OperatorFrame) -> np.ndarray:
        return self.chest_reference.T @ quat_to_mat(frame.node_orientations["chest"])

    def head_relative(self, frame: OperatorFrame) -> np.ndarray:
        return self.head_reference.T @ quat_to_mat(frame.head_orientation)


def calibrate(frames: list[OperatorFrame], max_variance_rad: float = 0.05) -> Calibration:
    """Average an N-pose window into alignment rotations.

    Raises OperatorMoving when any node wanders more than the variance bound
    from the window mean.
    """
    if not frames:
        raise ValueError("calibration needs at least one frame")
    means: dict[str, np.ndarray] = {}
    for node in NODE_NAMES:
        quats = np.array([f.node_orientations[node] for f in frames])
        # Sign-align then average; fine for sub-radian spreads.
        ref = quats[0]
        for i in range(len(quats)):
            if np.dot(quats[i], ref) < 0:
                quats[i] = -quats[i]
        mean = quats.mean(axis=0)
        mean = mean / np.linalg.norm(mean)
        R_mean = quat_to_mat(mean)
        for q in quats:
            deviation = np.linalg.norm(log_so3(R_mean.T @ quat_to_mat(q)))
            if deviation > max_variance_rad:
                raise OperatorMoving(
                    f"node {node} moved {deviation:.3f} rad during calibration"
                )
        means[node] = R_mean
    head_quats = np.array([f.head_orientation for f in frames])
    ref = head_quats[0]
    for i in range(len(head_quats)):
        if np.dot(head_quats[i], ref) < 0:
            head_quats[i] = -head_quats[i]
    head_mean = head_quats.mean(axis=0)
    head_mean = head_mean / np.linalg.norm(head_mean)

    chest_ref = means["chest"]
    alignments = {}
    for node in NODE_NAMES:
        rel = chest_ref.T @ means[node]
        alignments[node] = rel.T  # aligned_relative(calibration pose) == identity
    return Calibration(alignments, chest_ref, quat_to_mat(head_mean))
