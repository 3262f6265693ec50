"""Static description of the avatar robot.

Joint layout, geometry, mass distribution, motor specs and sensor layout are
the constants every other layer builds on. Values the platform does not pin
down (joint limits, axis placement, per-finger motor split) follow one
documented canonical table here, which is the single source of truth.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class UnknownJoint(KeyError):
    pass


class MotorClass(Enum):
    DC = "dc"
    BRUSHLESS_SMALL = "brushless_small"
    BRUSHLESS_LARGE = "brushless_large"


@dataclass(frozen=True)
class MotorSpec:
    motor_class: MotorClass
    rated_power_w: float
    rated_torque_nm: float  # motor side
    stall_torque_nm: float  # motor side
    gear_ratio: float = 100.0


MOTOR_SPECS = {
    MotorClass.DC: MotorSpec(MotorClass.DC, 20.0, 0.025, 0.035),
    MotorClass.BRUSHLESS_SMALL: MotorSpec(MotorClass.BRUSHLESS_SMALL, 110.0, 0.18, 0.22),
    MotorClass.BRUSHLESS_LARGE: MotorSpec(MotorClass.BRUSHLESS_LARGE, 179.0, 0.43, 0.48),
}

# Group layout: (name, dof). JointVector order is this concatenation.
GROUPS = (
    ("head", 4),
    ("neck", 3),
    ("left_arm", 7),
    ("right_arm", 7),
    ("left_hand", 9),
    ("right_hand", 9),
    ("torso", 3),
    ("left_leg", 6),
    ("right_leg", 6),
)

TOTAL_DOF = sum(n for _, n in GROUPS)

_ARM_JOINTS = (
    "shoulder_pitch",
    "shoulder_roll",
    "shoulder_yaw",
    "elbow",
    "wrist_yaw",
    "wrist_pitch",
    "wrist_roll",
)
# 9 hand motors: thumb 3, index 2, middle 2, ring+pinkie coupled 2.
_HAND_JOINTS = (
    "thumb_0",
    "thumb_1",
    "thumb_2",
    "index_0",
    "index_1",
    "middle_0",
    "middle_1",
    "ring_pinkie_0",
    "ring_pinkie_1",
)
_LEG_JOINTS = ("hip_pitch", "hip_roll", "hip_yaw", "knee", "ankle_pitch", "ankle_roll")

JOINT_NAMES_BY_GROUP = {
    "head": ("eyes_tilt", "eyes_version", "eyes_vergence", "eyelids"),
    "neck": ("neck_pitch", "neck_roll", "neck_yaw"),
    "left_arm": _ARM_JOINTS,
    "right_arm": _ARM_JOINTS,
    "left_hand": _HAND_JOINTS,
    "right_hand": _HAND_JOINTS,
    "torso": ("torso_yaw", "torso_roll", "torso_pitch"),
    "left_leg": _LEG_JOINTS,
    "right_leg": _LEG_JOINTS,
}

# Canonical limits in radians [min, max]; safe humanoid ranges.
_LIMITS = {
    "eyes_tilt": (-0.60, 0.60),
    "eyes_version": (-0.80, 0.80),
    "eyes_vergence": (0.00, 0.80),
    "eyelids": (0.00, 1.00),  # 0 fully open, 1 fully closed
    "neck_pitch": (-0.70, 0.70),
    "neck_roll": (-0.50, 0.50),
    "neck_yaw": (-1.20, 1.20),
    "shoulder_pitch": (-1.50, 1.50),
    "shoulder_roll": (-1.30, 1.30),
    "shoulder_yaw": (-1.30, 1.30),
    "elbow": (-0.10, 2.20),
    "wrist_yaw": (-1.00, 1.00),
    "wrist_pitch": (-1.00, 1.00),
    "wrist_roll": (-0.80, 0.80),
    "thumb_0": (0.00, 1.57),
    "thumb_1": (0.00, 1.57),
    "thumb_2": (0.00, 1.57),
    "index_0": (0.00, 1.57),
    "index_1": (0.00, 1.57),
    "middle_0": (0.00, 1.57),
    "middle_1": (0.00, 1.57),
    "ring_pinkie_0": (0.00, 1.57),
    "ring_pinkie_1": (0.00, 1.57),
    "torso_yaw": (-1.00, 1.00),
    "torso_roll": (-0.50, 0.50),
    "torso_pitch": (-0.30, 0.80),
    "hip_pitch": (-1.50, 1.00),
    "hip_roll": (-0.60, 0.60),
    "hip_yaw": (-1.00, 1.00),
    "knee": (0.00, 2.00),
    "ankle_pitch": (-0.80, 0.80),
    "ankle_roll": (-0.50, 0.50),
}

# Motor class per joint name. Brushless joints ride the EMS/2FOC path and
# accept torque/current/pwm modes; DC joints (MC4Plus) do not.
_BIG = {"hip_pitch", "knee", "ankle_pitch"}
_BRUSHLESS_SMALL = {
    "shoulder_pitch",
    "shoulder_roll",
    "shoulder_yaw",
    "elbow",
    "torso_yaw",
    "torso_roll",
    "torso_pitch",
    "hip_roll",
    "hip_yaw",
    "ankle_roll",
}


def _motor_class(joint: str) -> MotorClass:
    if joint in _BIG:
        return MotorClass.BRUSHLESS_LARGE
    if joint in _BRUSHLESS_SMALL:
        return MotorClass.BRUSHLESS_SMALL
    return MotorClass.DC


@dataclass(frozen=True)
class Geometry:
    height_m: float = 1.25
    width_arms_down_m: float = 0.43
    leg_length_m: float = 0.63
    arm_length_m: float = 0.56  # shoulder to fingertip
    foot_length_m: float = 0.25
    foot_width_m: float = 0.10
    foot_front_section_m: float = 0.13
    foot_rear_section_m: float = 0.12
    head_offset_m: float = 0.15  # neck-extended head offset

    def __post_init__(self):
        sections = self.foot_front_section_m + self.foot_rear_section_m
        if abs(sections - self.foot_length_m) > 1e-12:
            raise ValueError("foot sections must partition the foot length")


@dataclass(frozen=True)
class MassModel:
    total_kg: float = 52.0
    legs_fraction: float = 0.45
    arms_fraction: float = 0.20
    torso_head_fraction: float = 0.35

    def __post_init__(self):
        s = self.legs_fraction + self.arms_fraction + self.torso_head_fraction
        if abs(s - 1.0) > 1e-12:
            raise ValueError("mass fractions must sum to 1")

    def segment_mass(self, segment: str) -> float:
        return {
            "legs": self.legs_fraction,
            "arms": self.arms_fraction,
            "torso_and_head": self.torso_head_fraction,
        }[segment] * self.total_kg


FT_SENSOR_NAMES = (
    "left_shoulder",
    "right_shoulder",
    "left_foot_front",
    "left_foot_rear",
    "right_foot_front",
    "right_foot_rear",
)

SKIN_PATCHES = ("left_upper_arm", "right_upper_arm", "left_hand", "right_hand")


@dataclass(frozen=True)
class SensorLayout:
    ft_sensors: tuple = FT_SENSOR_NAMES
    skin_patches: tuple = SKIN_PATCHES
    skin_taxel_grid: dict = field(
        default_factory=lambda: {
            "left_upper_arm": (8, 6),
            "right_upper_arm": (8, 6),
            "left_hand": (6, 4),
            "right_hand": (6, 4),
        }
    )
    camera_resolution: tuple = (1024, 768)
    camera_fps: float = 15.0
    camera_count: int = 2
    eyelid_actuators: int = 1  # both lids share one DC motor
    face_led_grid: tuple = (16, 16)


class RobotModel:
    """Immutable whole-robot constant table."""

    def __init__(self):
        self.groups = GROUPS
        self.geometry = Geometry()
        self.mass = MassModel()
        self.sensors = SensorLayout()
        self.joint_names: list[str] = []
        self.joint_group: list[str] = []
        self._index: dict[tuple[str, int], int] = {}
        self._by_name: dict[str, int] = {}
        for group, dof in GROUPS:
            names = JOINT_NAMES_BY_GROUP[group]
            assert len(names) == dof
            for local, joint in enumerate(names):
                idx = len(self.joint_names)
                full = f"{group}.{joint}"
                self.joint_names.append(full)
                self.joint_group.append(group)
                self._index[(group, local)] = idx
                self._by_name[full] = idx
        limits = np.array([_LIMITS[n.split(".", 1)[1]] for n in self.joint_names])
        self.limits_low = limits[:, 0].copy()
        self.limits_high = limits[:, 1].copy()
        self.motor_class = [_motor_class(n.split(".", 1)[1]) for n in self.joint_names]
        self.brushless_mask = np.array(
            [mc is not MotorClass.DC for mc in self.motor_class], dtype=bool
        )
        self.limits_low.setflags(write=False)
        self.limits_high.setflags(write=False)

    @property
    def dof(self) -> int:
        return len(self.joint_names)

    def index(self, group: str, local: int) -> int:
        try:
            return self._index[(group, local)]
        except KeyError:
            raise UnknownJoint(f"{group}[{local}]") from None

    def index_of(self, full_name: str) -> int:
        try:
            return self._by_name[full_name]
        except KeyError:
            raise UnknownJoint(full_name) from None

    def group_slice(self, group: str) -> slice:
        start = 0
        for name, dof in GROUPS:
            if name == group:
                return slice(start, start + dof)
            start += dof
        raise UnknownJoint(group)

    def zero_vector(self) -> np.ndarray:
        return np.zeros(self.dof)

    def clamp(self, q: np.ndarray) -> tuple[np.ndarray, bool]:
        """Clamp into limits; returns (clamped copy, whether anything moved)."""
        clamped = np.clip(q, self.limits_low, self.limits_high)
        return clamped, bool(np.any(clamped != q))

    def validate(self, q: np.ndarray) -> None:
        q = np.asarray(q)
        if q.shape != (self.dof,):
            raise ValueError(f"joint vector must have length {self.dof}")
        if np.any(q < self.limits_low - 1e-12) or np.any(q > self.limits_high + 1e-12):
            bad = np.where((q < self.limits_low - 1e-12) | (q > self.limits_high + 1e-12))[0]
            raise LimitViolation(f"joints out of limits: {[self.joint_names[i] for i in bad]}")

    def joint_torque_limit(self, full_name: str, stall: bool = False) -> float:
        """Joint-side torque: motor torque times the 1/100 gearbox."""
        idx = self.index_of(full_name)
        spec = MOTOR_SPECS[self.motor_class[idx]]
        motor_torque = spec.stall_torque_nm if stall else spec.rated_torque_nm
        return motor_torque * spec.gear_ratio


class LimitViolation(ValueError):
    pass


_MODEL_CACHE: RobotModel | None = None


def build_icub3_model() -> RobotModel:
    """The fully populated constant model (cached; immutable)."""
    global _MODEL_CACHE
    if _MODEL_CACHE is None:
        _MODEL_CACHE = RobotModel()
    return _MODEL_CACHE


# -- structured text export -------------------------------------------------


def export_model_text(model: RobotModel) -> str:
    """Human-readable dump of every constant; `load_model_text` parses it."""
    lines = ["# avatar robot model table", "[groups]"]
    for group, dof in model.groups:
        lines.append(f"{group} = {dof}")
    lines.append("[joints]")
    for i, name in enumerate(model.joint_names):
        lines.append(
            f"{name} limits=({float(model.limits_low[i])!r}, {float(model.limits_high[i])!r}) "
            f"motor={model.motor_class[i].value}"
        )
    g = model.geometry
    lines.append("[geometry]")
    for key in (
        "height_m",
        "width_arms_down_m",
        "leg_length_m",
        "arm_length_m",
        "foot_length_m",
        "foot_width_m",
        "foot_front_section_m",
        "foot_rear_section_m",
        "head_offset_m",
    ):
        lines.append(f"{key} = {getattr(g, key)!r}")
    m = model.mass
    lines.append("[mass]")
    lines.append(f"total_kg = {m.total_kg!r}")
    lines.append(f"legs_fraction = {m.legs_fraction!r}")
    lines.append(f"arms_fraction = {m.arms_fraction!r}")
    lines.append(f"torso_head_fraction = {m.torso_head_fraction!r}")
    s = model.sensors
    lines.append("[sensors]")
    lines.append("ft_sensors = " + ",".join(s.ft_sensors))
    lines.append("skin_patches = " + ",".join(s.skin_patches))
    lines.append(
        f"camera = {s.camera_count}x{s.camera_resolution[0]}x{s.camera_resolution[1]}@{s.camera_fps!r}fps"
    )
    lines.append(f"eyelid_actuators = {s.eyelid_actuators}")
    return "\n".join(lines) + "\n"


def load_model_text(text: str) -> dict:
    """Parse the export back into plain dicts (for cross-checking tests)."""
    section = None
    out: dict = {"groups": {}, "joints": {}, "geometry": {}, "mass": {}, "sensors": {}}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        if section == "joints":
            name, rest = line.split(" ", 1)
            fields = {}
            for part in rest.split(" motor="):
                if part.startswith("limits="):
                    fields["limits"] = part[len("limits=") :].strip()
                else:
                    fields["motor"] = part.strip()
            lo, hi = ast.literal_eval(fields["limits"])
            out["joints"][name] = {"limits": (lo, hi), "motor": fields["motor"]}
        elif section in ("groups", "geometry", "mass", "sensors"):
            key, value = (part.strip() for part in line.split("=", 1))
            if section == "groups":
                out["groups"][key] = int(value)
            elif section == "sensors":
                out["sensors"][key] = value
            else:
                out[section][key] = float(ast.literal_eval(value))
    return out
