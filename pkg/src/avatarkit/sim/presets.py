"""Named arm-pose presets used by the console and scenario scripts."""

from __future__ import annotations

import numpy as np

from ..model.robot import RobotModel

# Joint deltas per preset (full names); everything else stays at the
# standing posture.
ARM_POSE_PRESETS: dict[str, dict[str, float]] = {
    "neutral": {},
    "point_right": {
        "right_arm.shoulder_pitch": -1.2,
        "right_arm.elbow": 0.25,
    },
    "point_left": {
        "left_arm.shoulder_pitch": -1.2,
        "left_arm.elbow": 0.25,
    },
    "wave_right": {
        "right_arm.shoulder_pitch": -1.0,
        "right_arm.shoulder_roll": -0.8,
        "right_arm.elbow": 1.2,
    },
    "grasp_reach_right": {
        "right_arm.shoulder_pitch": -0.9,
        "right_arm.elbow": 0.5,
        "torso.torso_pitch": 0.15,
    },
    "grasp_reach_left": {
        "left_arm.shoulder_pitch": -0.9,
        "left_arm.elbow": 0.5,
        "torso.torso_pitch": 0.15,
    },
}


def preset_posture(model: RobotModel, base_posture: np.ndarray, name: str) -> np.ndarray:
    if name not in ARM_POSE_PRESETS:
        raise KeyError(f"unknown arm pose preset {name!r}")
    q = base_posture.copy()
    for joint, value in ARM_POSE_PRESETS[name].items():
        j = model.index_of(joint)
        q[j] = np.clip(value, model.limits_low[j], model.limits_high[j])
    return q
