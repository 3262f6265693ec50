"""Kinematic world: joints track servo targets, the base rides the
simplified model, sensors are synthesized, touches are injected.

Joints follow commanded positions through a first-order lag; the base xy
follows the point-mass CoM integrated under the commanded ZMP; synthetic
foot wrenches share the robot weight over the contacting sections with
inverse-square-distance weights to the commanded ZMP, so the measured ZMP
stays statically consistent (sum fz = m g) and inside the support polygon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import SimulatorConfig
from ..feedback.frames import FrameDescriptor, SceneObject
from ..feedback.routing import SkinEvent
from ..locomotion.centroidal import foot_pose_T
from ..model.kinematics import fk_world, ft_sensor_positions, transform
from ..model.robot import RobotModel, SKIN_PATCHES
from ..model.rotations import mat_to_quat, rot_z


class UnknownPatch(KeyError):
    pass


class Divergence(RuntimeError):
    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


@dataclass
class WorldState:
    time: float
    base_T: np.ndarray
    joint_positions: np.ndarray
    joint_velocities: np.ndarray
    com: np.ndarray  # (2,) ground-plane point-mass position
    com_vel: np.ndarray
    foot_contacts: dict
    foot_poses: dict  # foot -> (x, y, yaw)
    swing_pose: dict | None
    objects: dict = field(default_factory=dict)
    face_pattern: int = 0


class World:
    def __init__(
        self,
        model: RobotModel,
        cfg: SimulatorConfig,
        q0: np.ndarray,
        base0: np.ndarray,
        omega: float,
        seed: int = 1,
    ):
        self.model = model
        self.cfg = cfg
        self.omega = omega
        self.rng = np.random.default_rng(seed)
        frames = fk_world(model, q0, base0)
        foot_poses = {}
        for foot in ("left", "right"):
            T = frames[f"{foot}_leg/sole"]
            foot_poses[foot] = (
                float(T[0, 3]),
                float(T[1, 3]),
                float(math.atan2(T[1, 0], T[0, 0])),
            )
        com0 = (np.array(foot_poses["left"][:2]) + np.array(foot_poses["right"][:2])) / 2.0
        self.state = WorldState(
            time=0.0,
            base_T=base0.copy(),
            joint_positions=q0.copy(),
            joint_velocities=np.zeros(model.dof),
            com=com0,
            com_vel=np.zeros(2),
            foot_contacts={"left": True, "right": True},
            foot_poses=foot_poses,
            swing_pose=None,
        )
        self._base_offset = base0[:2, 3] - com0
        self._base_z = float(base0[2, 3])
        self._sensor_local = ft_sensor_positions(model)  # sole-frame section centers
        self.pending_skin: list[SkinEvent] = []
        self.mass_kg = model.mass.total_kg
        self.gravity = 9.81

    # -- stepping -----------------------------------------------------------

    def step(
        self,
        dt: float,
        joint_targets: np.ndarray,
        zmp_cmd: np.ndarray,
        foot_poses: dict,
        foot_contacts: dict,
        swing_pose: dict | None,
        base_yaw_ref: float,
    ) -> WorldState:
        s = self.state
        alpha = 1.0 - math.exp(-dt / self.cfg.servo_tau)
        q_prev = s.joint_positions.copy()
        s.joint_positions = s.joint_positions + alpha * (joint_targets - s.joint_positions)
        s.joint_velocities = (s.joint_positions - q_prev) / dt

        # Point-mass CoM under the commanded ZMP (the simplified model).
        acc = (self.omega**2) * (s.com - np.asarray(zmp_cmd))
        s.com_vel = s.com_vel + acc * dt
        s.com = s.com + s.com_vel * dt

        s.base_T = transform(R=rot_z(base_yaw_ref), p=[*(s.com + self._base_offset), self._base_z])
        s.foot_poses = dict(foot_poses)
        s.foot_contacts = dict(foot_contacts)
        s.swing_pose = swing_pose
        s.time += dt

        if not (
            np.all(np.isfinite(s.joint_positions))
            and np.all(np.isfinite(s.com))
            and np.all(np.isfinite(s.com_vel))
        ):
            raise Divergence(
                "non-finite world state",
                {
                    "time": s.time,
                    "com": s.com.tolist(),
                    "com_vel": s.com_vel.tolist(),
                    "bad_joints": np.where(~np.isfinite(s.joint_positions))[0].tolist(),
                },
            )
        return s

    # -- synthetic sensors ----------------------------------------------------

    def sensor_poses(self) -> dict[str, np.ndarray]:
        poses = {}
        for foot in ("left", "right"):
            sole = foot_pose_T(*self.state.foot_poses[foot])
            for section in ("front", "rear"):
                local = self._sensor_local[section]
                T = sole @ transform(p=[local[0], local[1], 0.0])
                poses[f"{foot}_foot_{section}"] = T
        return poses

    def foot_wrenches(self, zmp_cmd: np.ndarray) -> dict[str, np.ndarray]:
        """Static load sharing: inverse-square-distance weights to the
        commanded ZMP over the contacting sections."""
        poses = self.sensor_poses()
        active = [
            name
            for name in poses
            if self.state.foot_contacts[name.split("_")[0]]
        ]
        wrenches = {name: np.zeros(6) for name in poses}
        if not active:
            return wrenches
        weights = []
        for name in active:
            d2 = float(np.sum((poses[name][:2, 3] - zmp_cmd) ** 2))
            weights.append(1.0 / (d2 + 1e-4))
        total = sum(weights)
        load = self.mass_kg * self.gravity
        for name, w in zip(active, weights):
            wrenches[name][2] = load * w / total
        return wrenches

    def shoulder_wrenches(self) -> dict[str, np.ndarray]:
        arm_weight = self.model.mass.segment_mass("arms") / 2.0 * self.gravity
        return {
            "left_shoulder": np.array([0.0, 0.0, arm_weight, 0.0, 0.0, 0.0]),
            "right_shoulder": np.array([0.0, 0.0, arm_weight, 0.0, 0.0, 0.0]),
        }

    # -- interaction ----------------------------------------------------------

    def inject_touch(self, patch: str, taxels, intensity: float) -> SkinEvent | None:
        if patch not in SKIN_PATCHES:
            raise UnknownPatch(patch)
        if intensity <= 0.0:
            return None
        event = SkinEvent(patch, frozenset(taxels), float(intensity), self.state.time)
        self.pending_skin.append(event)
        return event

    def spawn_object(self, object_id: int, position, yaw: float = 0.0) -> None:
        self.state.objects[int(object_id)] = (tuple(position), yaw)

    def set_face(self, pattern: int) -> None:
        self.state.face_pattern = int(pattern)

    def camera_frame(self) -> FrameDescriptor:
        frames = fk_world(self.model, self.state.joint_positions, self.state.base_T)
        cam = frames["neck_head/camera"]
        objects = tuple(
            SceneObject(oid, pos, tuple(mat_to_quat(rot_z(yaw))))
            for oid, (pos, yaw) in sorted(self.state.objects.items())
        )
        return FrameDescriptor(
            timestamp=self.state.time,
            camera_position=tuple(cam[:3, 3]),
            camera_orientation=tuple(mat_to_quat(cam[:3, :3])),
            objects=objects,
        )
