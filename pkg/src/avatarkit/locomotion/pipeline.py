"""The layered locomotion pipeline tick.

Outer to inner: footstep planning (event driven, re-plans at step boundaries
on command change or step completion), simplified-model centroidal control
at 100 Hz, whole-body QP at 100 Hz. The retargeted posture enters only the
QP's low-priority regularization. Layer errors surface as fault events and
the pipeline holds the last stable reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import LocomotionConfig
from ..model.kinematics import fk_world, polygon_margin
from ..model.robot import RobotModel
from ..model.rotations import rot_z, yaw_of
from .centroidal import (
    CentroidalRefs,
    InfeasiblePlan,
    commanded_zmp,
    foot_pose_T,
    generate_centroidal,
)
from .footsteps import FootstepPlan, WalkingCommand, plan_footsteps
from .qp import QpInfeasible
from .whole_body import TaskStack, solve_whole_body_qp


@dataclass(frozen=True)
class FaultEvent:
    t: float
    source: str
    message: str


@dataclass
class PipelineOutput:
    t: float
    q_ref: np.ndarray
    zmp_cmd: np.ndarray
    foot_poses: dict  # foot -> (x, y, yaw) current ground placement
    foot_contacts: dict  # foot -> bool
    swing_pose: dict | None  # in-flight foot pose (x, y, z, yaw)
    base_yaw_ref: float
    diag: dict
    faults: list[FaultEvent] = field(default_factory=list)


def _minjerk_s(tau: float) -> float:
    tau = min(max(tau, 0.0), 1.0)
    return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau)


class ControlPipeline:
    def __init__(
        self,
        model: RobotModel,
        cfg: LocomotionConfig,
        q0: np.ndarray,
        base0: np.ndarray,
        t0: float = 0.0,
    ):
        self.model = model
        self.cfg = cfg
        self.dt = 1.0 / cfg.rate_hz
        self.command = WalkingCommand()
        self._pending_cmd: WalkingCommand | None = None
        self.posture_ref = q0.copy()
        self.q_ref = q0.copy()
        self.faults: list[FaultEvent] = []

        frames = fk_world(model, q0, base0)
        self.foot_poses = {
            foot: (
                float(frames[f"{foot}_leg/sole"][0, 3]),
                float(frames[f"{foot}_leg/sole"][1, 3]),
                float(yaw_of(frames[f"{foot}_leg/sole"][:3, :3])),
            )
            for foot in ("left", "right")
        }
        self.root_height_ref = float(base0[2, 3])
        com0 = self._stance_center()
        self.plan: FootstepPlan = plan_footsteps(
            WalkingCommand(), self.foot_poses, 1, cfg, t0=t0
        )
        self.refs: CentroidalRefs = generate_centroidal(
            self.plan, (com0, np.zeros(2)), cfg, model, tail_s=4.0
        )
        self._next_boundary = math.inf  # standing: no step boundary
        self._last_swing = "left"
        self._prev_polygon = None  # polygon the latest measurement was taken in

    # -- inputs -------------------------------------------------------------

    def set_command(self, cmd: WalkingCommand, t: float) -> None:
        """Commands apply at the next step boundary; from stand, immediately."""
        if cmd == self.command and self._pending_cmd is None:
            return
        if not self.plan.steps:
            self.command = cmd
            self._replan(t, first_swing="right")
        else:
            self._pending_cmd = cmd

    def set_posture_reference(self, q_ref: np.ndarray) -> None:
        clamped, _ = self.model.clamp(np.asarray(q_ref, dtype=float))
        self.posture_ref = clamped

    # -- planning -----------------------------------------------------------

    def _stance_center(self) -> np.ndarray:
        left = np.array(self.foot_poses["left"][:2])
        right = np.array(self.foot_poses["right"][:2])
        return (left + right) / 2.0

    def _replan(self, t: float, first_swing: str, com_state=None) -> None:
        if com_state is None:
            com_state = (self._stance_center(), np.zeros(2))
        try:
            plan = plan_footsteps(
                self.command,
                self.foot_poses,
                self.cfg.plan_horizon_steps,
                self.cfg,
                t0=t,
                first_swing=first_swing,
            )
            refs = generate_centroidal(plan, com_state, self.cfg, self.model, tail_s=4.0)
        except (InfeasiblePlan, ValueError) as exc:
            self.faults.append(FaultEvent(t, "planner", str(exc)))
            return
        self.plan = plan
        self.refs = refs
        self._next_boundary = t + self.cfg.step_period if plan.steps else math.inf

    def _on_step_boundary(self, t: float, com_state) -> None:
        # The first planned step has landed: commit its foothold.
        if self.plan.steps:
            landed = self.plan.steps[0]
            self.foot_poses[landed.foot] = (landed.x, landed.y, landed.yaw)
            self._last_swing = landed.foot
        if self._pending_cmd is not None:
            self.command = self._pending_cmd
            self._pending_cmd = None
        swing = "left" if self._last_swing == "right" else "right"
        self._replan(t, first_swing=swing, com_state=com_state)

    # -- per-tick -----------------------------------------------------------

    def tick(
        self,
        t: float,
        q_meas: np.ndarray,
        base_T: np.ndarray,
        com_meas: np.ndarray,
        com_vel_meas: np.ndarray,
        zmp_meas: np.ndarray | None,
    ) -> PipelineOutput:
        faults_before = len(self.faults)
        com_state = (np.asarray(com_meas, dtype=float), np.asarray(com_vel_meas, dtype=float))
        if not np.all(np.isfinite(com_state[0])):
            raise ValueError("non-finite CoM measurement")

        if t >= self._next_boundary - 1e-9:
            self._on_step_boundary(t, com_state)
        elif not self.plan.steps and t > self.refs.t_end - 1.0:
            self._replan(t, first_swing="right", com_state=com_state)

        omega = self.refs.omega
        dcm_meas = com_state[0] + com_state[1] / omega
        p_cmd = commanded_zmp(self.refs, t, dcm_meas, zmp_meas, self.cfg, self.model)
        sample = self.refs.sample(t)
        phase = self.refs.phase_at(t)

        foot_refs, foot_vel_refs, contacts, swing_pose = self._foot_references(t, phase)
        yaw_ref = float(np.mean([p[2] for p in phase.poses.values()]))
        stack = TaskStack(
            com_ref=sample["com_ref"].copy(),
            com_vel_ref=sample["com_vel_ref"].copy(),
            foot_refs=foot_refs,
            foot_vel_refs=foot_vel_refs,
            root_height_ref=self.root_height_ref,
            torso_R_ref=rot_z(yaw_ref),
            posture_ref=self.posture_ref,
        )
        try:
            result = solve_whole_body_qp(
                self.model, stack, q_meas, base_T, self.cfg, self.dt, q_ref_prev=self.q_ref
            )
            self.q_ref = result.q_ref
            qp_diag = {
                "high_residual": result.high_residual,
                "qp_iterations": result.solution.iterations,
                "com_kinematic": result.com,
            }
        except QpInfeasible as exc:
            # Hold the previous reference, never extrapolate.
            self.faults.append(FaultEvent(t, "whole_body_qp", str(exc)))
            qp_diag = {"high_residual": math.nan, "qp_iterations": 0, "com_kinematic": None}

        # Measurements are one tick old: grade them in the polygon they were
        # taken in, not the polygon the phase just switched to.
        polygon = phase.polygon(self.model)
        margin = math.nan
        if zmp_meas is not None:
            against = self._prev_polygon if self._prev_polygon is not None else polygon
            margin = polygon_margin(against, zmp_meas)
        self._prev_polygon = polygon
        diag = {
            "t": t,
            "stance": phase.stance,
            "zmp_ref": sample["zmp_ref"].copy(),
            "zmp_cmd": p_cmd.copy(),
            "zmp_meas": None if zmp_meas is None else np.asarray(zmp_meas, dtype=float).copy(),
            "dcm_ref": sample["dcm_ref"].copy(),
            "dcm_meas": dcm_meas.copy(),
            "com_ref": sample["com_ref"].copy(),
            "zmp_margin": margin,
            "command": self.command,
            **qp_diag,
        }
        return PipelineOutput(
            t=t,
            q_ref=self.q_ref.copy(),
            zmp_cmd=p_cmd,
            foot_poses=dict(self.foot_poses),
            foot_contacts=contacts,
            swing_pose=swing_pose,
            base_yaw_ref=yaw_ref,
            diag=diag,
            faults=self.faults[faults_before:],
        )

    def _foot_references(self, t: float, phase) -> tuple[dict, dict, dict, dict | None]:
        foot_refs: dict = {}
        foot_vel_refs: dict = {}
        contacts = {"left": True, "right": True}
        swing_pose = None
        for foot in ("left", "right"):
            x, y, yaw = phase.poses[foot]
            foot_refs[foot] = foot_pose_T(x, y, yaw)
            foot_vel_refs[foot] = np.zeros(6)
        if phase.swing is not None and phase.stance != "double":
            foot = phase.swing
            contacts[foot] = False
            tau = (t - phase.t_start) / max(phase.t_end - phase.t_start, 1e-9)
            s = _minjerk_s(tau)
            x0, y0, yaw0 = phase.swing_from
            x1, y1, yaw1 = phase.swing_to
            x = x0 + (x1 - x0) * s
            y = y0 + (y1 - y0) * s
            yaw = yaw0 + (yaw1 - yaw0) * s
            z = self.cfg.swing_height * 4.0 * tau * (1.0 - tau)
            T = foot_pose_T(x, y, yaw)
            T[2, 3] = z
            foot_refs[foot] = T
            swing_pose = {"foot": foot, "x": x, "y": y, "z": z, "yaw": yaw}
        return foot_refs, foot_vel_refs, contacts, swing_pose
