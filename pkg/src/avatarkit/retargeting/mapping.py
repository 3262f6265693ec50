"""Per-frame retargeting maps: arms+torso, head/gaze/eyelids, fingers,
treadmill locomotion, face expressions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import RetargetingConfig
from ..locomotion.footsteps import WalkingCommand
from ..model.robot import RobotModel
from ..model.rotations import euler_zyx
from .arms import ArmIkResult, retarget_arm_orientations
from .frames import EXPRESSIONS, Calibration, OperatorFrame, UnknownExpression

FACE_PATTERNS = {name: i for i, name in enumerate(EXPRESSIONS)}


@dataclass
class RetargetedRefs:
    posture_ref: np.ndarray  # 54, arms+torso populated
    head_ref: dict  # neck_pitch/roll/yaw, eyes_tilt/version/vergence, eyelids
    finger_refs: dict  # hand -> 9 motor values in [0, 1]
    walking_cmd: WalkingCommand
    face_pattern: int
    clamped: bool = False
    ik: dict[str, ArmIkResult] = field(default_factory=dict)

    def merged_joint_targets(self, model: RobotModel) -> np.ndarray:
        """Full joint vector: posture plus head and finger channels."""
        q = self.posture_ref.copy()
        for name, value in self.head_ref.items():
            q[model.index_of(name)] = value
        for hand in ("left", "right"):
            s = model.group_slice(f"{hand}_hand")
            lo = model.limits_low[s]
            hi = model.limits_high[s]
            q[s] = lo + self.finger_refs[hand] * (hi - lo)
        return q


def retarget_fingers(flexions: np.ndarray) -> np.ndarray:
    """5 finger flexions to the hand's 9 motors: thumb 3, index 2, middle 2,
    ring+pinkie coupled 2 (coupled motors take the pair's mean)."""
    flex = np.clip(np.asarray(flexions, dtype=float), 0.0, 1.0)
    thumb, index, middle, ring, pinkie = flex
    coupled = (ring + pinkie) / 2.0
    return np.array(
        [thumb, thumb, thumb, index, index, middle, middle, coupled, coupled]
    )


def retarget_face(expression: str) -> int:
    try:
        return FACE_PATTERNS[expression]
    except KeyError:
        raise UnknownExpression(expression) from None


def retarget_head(model: RobotModel, frame: OperatorFrame, cal: Calibration) -> dict:
    """Neck joints from head orientation, eyes from gaze, eyelid from
    openness (single coupled actuator; joint value is closure)."""
    R = cal.head_relative(frame)
    yaw, pitch, roll = euler_zyx(R)
    version, vergence, tilt = frame.gaze

    def clamp(joint: str, value: float) -> float:
        i = model.index_of(joint)
        return float(np.clip(value, model.limits_low[i], model.limits_high[i]))

    eyelid_hi = model.limits_high[model.index_of("head.eyelids")]
    return {
        "neck.neck_yaw": clamp("neck.neck_yaw", yaw),
        "neck.neck_pitch": clamp("neck.neck_pitch", pitch),
        "neck.neck_roll": clamp("neck.neck_roll", roll),
        "head.eyes_version": clamp("head.eyes_version", version),
        "head.eyes_vergence": clamp("head.eyes_vergence", vergence),
        "head.eyes_tilt": clamp("head.eyes_tilt", tilt),
        "head.eyelids": float((1.0 - frame.eye_openness) * eyelid_hi),
    }


class LocomotionFilter:
    """Deadzone + clamp + first-order low-pass on the treadmill speed."""

    def __init__(self, cfg: RetargetingConfig, max_speed: float):
        self.cfg = cfg
        self.max_speed = max_speed
        self.speed = 0.0
        self._last_t: float | None = None

    def update(self, treadmill_speed: float, ring_heading: float, t: float) -> WalkingCommand:
        target = treadmill_speed if abs(treadmill_speed) >= self.cfg.treadmill_deadzone else 0.0
        target = float(np.clip(target, 0.0, self.max_speed))
        if self._last_t is None:
            dt = 0.0
        else:
            dt = max(t - self._last_t, 0.0)
        self._last_t = t
        alpha = 1.0 - math.exp(-dt / self.cfg.command_filter_tau) if dt > 0 else 0.0
        self.speed += alpha * (target - self.speed)
        return WalkingCommand(heading=ring_heading, speed=self.speed)


def retarget_torso(model: RobotModel, frame: OperatorFrame, cal: Calibration) -> tuple[np.ndarray, bool]:
    """Torso joints from the chest orientation change (yaw-roll-pitch)."""
    R = cal.chest_relative(frame)
    # Torso chain is Rz(a) Rx(b) Ry(c); decompose accordingly.
    b = math.asin(max(-1.0, min(1.0, R[2, 1])))
    cb = math.cos(b)
    if abs(cb) > 1e-9:
        a = math.atan2(-R[0, 1] / cb, R[1, 1] / cb)
        c = math.atan2(-R[2, 0] / cb, R[2, 2] / cb)
    else:
        a = 0.0
        c = 0.0
    values = {"torso.torso_yaw": a, "torso.torso_roll": b, "torso.torso_pitch": c}
    out = np.zeros(3)
    clamped = False
    s = model.group_slice("torso")
    for k, (name, v) in enumerate(values.items()):
        i = model.index_of(name)
        cv = float(np.clip(v, model.limits_low[i], model.limits_high[i]))
        clamped |= cv != v
        out[k] = cv
    assert s.stop - s.start == 3
    return out, clamped


class Retargeter:
    """Stateful per-frame retargeting pipeline (calibration + filter state)."""

    def __init__(self, model: RobotModel, cfg: RetargetingConfig, cal: Calibration, max_speed: float):
        self.model = model
        self.cfg = cfg
        self.cal = cal
        self.filter = LocomotionFilter(cfg, max_speed)
        self._seeds: dict[str, np.ndarray | None] = {"left": None, "right": None}

    def process(self, frame: OperatorFrame) -> RetargetedRefs:
        model = self.model
        posture = model.zero_vector()
        clamped = False
        torso, torso_clamped = retarget_torso(model, frame, self.cal)
        posture[model.group_slice("torso")] = torso
        clamped |= torso_clamped

        ik_results: dict[str, ArmIkResult] = {}
        for side in ("left", "right"):
            R_ua = self.cal.aligned_relative(frame, f"{side}_upper_arm")
            R_fa = self.cal.aligned_relative(frame, f"{side}_forearm")
            res = retarget_arm_orientations(
                model, side, R_ua, R_fa, self.cfg, seed=self._seeds[side]
            )
            self._seeds[side] = res.joints
            ik_results[side] = res
            posture[model.group_slice(f"{side}_arm")] = res.joints
            clamped |= res.clamped

        head_ref = retarget_head(model, frame, self.cal)
        fingers = {
            hand: retarget_fingers(frame.finger_flexions[hand]) for hand in ("left", "right")
        }
        cmd = self.filter.update(frame.treadmill_speed, frame.treadmill_heading, frame.timestamp)
        refs = RetargetedRefs(
            posture_ref=posture,
            head_ref=head_ref,
            finger_refs=fingers,
            walking_cmd=cmd,
            face_pattern=retarget_face(frame.expression),
            clamped=clamped,
            ik=ik_results,
        )
        # Hard guarantee: everything we emit respects model limits.
        model.validate(refs.merged_joint_targets(model))
        return refs
