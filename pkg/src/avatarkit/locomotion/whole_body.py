"""Whole-body stack-of-tasks QP at the velocity level.

Decision variables are the base twist plus the body joint velocities
(torso, arms, legs). High-priority tasks (CoM, both sole poses, root-link
height) enter as equality constraints; low-priority tasks (torso
orientation, posture regularization toward the retargeted reference) are
weighted costs. Joint position/velocity limits are inequality bounds. The
solution integrates one tick into a joint position reference for the
position-direct servo mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import LocomotionConfig
from ..model.kinematics import MOUNTS, _COM_POINTS, chain_jacobian, fk_world
from ..model.robot import RobotModel
from ..model.rotations import hat, log_so3
from .qp import QpProblem, QpSolution, solve_qp

ACTIVE_GROUPS = ("torso", "left_arm", "right_arm", "left_leg", "right_leg")


def active_joint_indices(model: RobotModel) -> list[int]:
    idx: list[int] = []
    for group in ACTIVE_GROUPS:
        s = model.group_slice(group)
        idx.extend(range(s.start, s.stop))
    return idx


def _chain_path(frame: str) -> list[tuple[str, str]]:
    """Chains (and the link on each) between the base and ``frame``."""
    if frame == "pelvis":
        return []
    if frame in ("chest", "torso/torso"):
        return [("torso", frame.split("/")[-1] if "/" in frame else "chest")]
    chain, link = frame.split("/")
    if chain in ("left_leg", "right_leg"):
        return [(chain, link)]
    return [("torso", "chest"), (chain, link)]


def frame_jacobian(
    model: RobotModel,
    q: np.ndarray,
    base_T: np.ndarray,
    frames: dict[str, np.ndarray],
    frame: str,
    point_offset: np.ndarray | None = None,
) -> np.ndarray:
    """6 x (6 + dof) geometric Jacobian of ``frame`` (world rows, columns =
    [base linear, base angular, all joints]). ``point_offset`` shifts the
    linear rows to a point rigidly attached to the frame."""
    T = frames[frame]
    p = T[:3, 3].copy()
    if point_offset is not None:
        p = p + T[:3, :3] @ point_offset
    J = np.zeros((6, 6 + model.dof))
    J[:3, :3] = np.eye(3)
    J[:3, 3:6] = -hat(p - base_T[:3, 3])
    J[3:, 3:6] = np.eye(3)
    for chain, link in _chain_path(frame):
        parent, mount = MOUNTS[chain]
        root = (base_T if parent == "pelvis" else frames["chest"]) @ mount
        Jc, cols = chain_jacobian(model, chain, q, link, base=root)
        if chain == "torso":
            link_key = "chest" if link == "chest" else "torso/torso"
        else:
            link_key = f"{chain}/{link}"
        p_link = frames[link_key][:3, 3]
        shift = -hat(p - p_link)
        for c, j in enumerate(cols):
            J[:3, 6 + j] += Jc[:3, c] + shift @ Jc[3:, c]
            J[3:, 6 + j] += Jc[3:, c]
    return J


def com_and_jacobian(
    model: RobotModel, q: np.ndarray, base_T: np.ndarray, frames: dict[str, np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    total = 0.0
    com = np.zeros(3)
    J = np.zeros((3, 6 + model.dof))
    for frame, offset, segment, share in _COM_POINTS:
        m = model.mass.segment_mass(segment) * share
        T = frames[frame]
        com += m * (T[:3, :3] @ np.asarray(offset) + T[:3, 3])
        J += m * frame_jacobian(model, q, base_T, frames, frame, np.asarray(offset))[:3]
        total += m
    return com / total, J / total


@dataclass
class TaskStack:
    """Per-tick task references for the QP."""

    com_ref: np.ndarray  # (2,) ground plane; height rides the root task
    com_vel_ref: np.ndarray  # (2,)
    foot_refs: dict  # foot -> 4x4 target pose
    foot_vel_refs: dict  # foot -> (6,) feedforward twist
    root_height_ref: float
    torso_R_ref: np.ndarray  # (3,3)
    posture_ref: np.ndarray  # (54,) joint regularization target
    torso_w_ref: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class WholeBodyResult:
    q_ref: np.ndarray  # integrated active-joint reference (full 54 vector)
    velocity: np.ndarray  # QP solution
    solution: QpSolution
    high_residual: float
    com: np.ndarray


def assemble_whole_body_qp(
    model: RobotModel,
    stack: TaskStack,
    q: np.ndarray,
    base_T: np.ndarray,
    cfg: LocomotionConfig,
    dt: float,
) -> tuple[QpProblem, dict]:
    active = active_joint_indices(model)
    cols = list(range(6)) + [6 + j for j in active]
    n = len(cols)
    frames = fk_world(model, q, base_T)
    k = cfg.qp_task_gain

    rows_eq = []
    rhs_eq = []
    com, J_com = com_and_jacobian(model, q, base_T, frames)
    # Ground-plane CoM only: the simplified model prescribes xy at constant
    # height, and the root task owns the vertical.
    rows_eq.append(J_com[:2, cols])
    rhs_eq.append(stack.com_vel_ref[:2] + k * (stack.com_ref[:2] - com[:2]))
    for foot in ("left", "right"):
        frame = f"{foot}_leg/sole"
        J = frame_jacobian(model, q, base_T, frames, frame)[:, cols]
        T_cur = frames[frame]
        T_ref = stack.foot_refs[foot]
        err = np.concatenate(
            [T_ref[:3, 3] - T_cur[:3, 3], log_so3(T_ref[:3, :3] @ T_cur[:3, :3].T)]
        )
        rows_eq.append(J)
        rhs_eq.append(stack.foot_vel_refs[foot] + k * err)
    root_row = np.zeros(n)
    root_row[2] = 1.0  # base vertical velocity
    rows_eq.append(root_row[None, :])
    rhs_eq.append(np.array([k * (stack.root_height_ref - base_T[2, 3])]))

    A_eq = np.vstack(rows_eq)
    b_eq = np.concatenate(rhs_eq)

    # Low-priority costs.
    J_torso = frame_jacobian(model, q, base_T, frames, "chest")[3:, cols]
    w_torso_des = stack.torso_w_ref + k * log_so3(stack.torso_R_ref @ frames["chest"][:3, :3].T)
    # Posture regularization: the retargeted reference owns arms and torso;
    # legs are dominated by the foot/CoM constraints and only lightly pinned,
    # so upper-body tracking cannot stall against leg compensation.
    weights = np.empty(len(active))
    for row, j in enumerate(active):
        group = model.joint_group[j]
        weights[row] = cfg.qp_w_posture_legs if group.endswith("_leg") else cfg.qp_w_posture
    S = np.zeros((len(active), n))
    S[:, 6:] = np.diag(np.sqrt(weights))
    u_des = np.sqrt(weights) * (cfg.qp_posture_gain * (stack.posture_ref[active] - q[active]))
    H = 2.0 * (
        cfg.qp_w_torso * J_torso.T @ J_torso + S.T @ S + cfg.qp_ridge * np.eye(n)
    )
    g = -2.0 * (cfg.qp_w_torso * J_torso.T @ w_torso_des + S.T @ u_des)

    # Bounds: joint velocity plus position-limit fences; generous base bounds.
    vmax = np.full(n, 10.0)
    vmax[6:] = cfg.qp_max_joint_vel
    ub = vmax.copy()
    lb = -vmax
    qa = q[active]
    ub[6:] = np.minimum(ub[6:], (model.limits_high[active] - qa) / dt)
    lb[6:] = np.maximum(lb[6:], (model.limits_low[active] - qa) / dt)
    A_in = np.vstack([np.eye(n), -np.eye(n)])
    b_in = np.concatenate([ub, -lb])

    meta = {"active": active, "frames": frames, "com": com, "cols": cols}
    return QpProblem(H, g, A_eq, b_eq, A_in, b_in), meta


def solve_whole_body_qp(
    model: RobotModel,
    stack: TaskStack,
    q: np.ndarray,
    base_T: np.ndarray,
    cfg: LocomotionConfig,
    dt: float,
    q_ref_prev: np.ndarray | None = None,
) -> WholeBodyResult:
    """Solve one velocity-level tick and integrate the joint reference.

    The reference integrates on the previous reference (not the measurement)
    so the inner servo lag does not scale down commanded velocities; an
    anti-windup clamp keeps it within 0.3 rad of the measured position.
    Raises QpInfeasible on constraint conflict; callers hold the previous
    reference and raise a fault event.
    """
    problem, meta = assemble_whole_body_qp(model, stack, q, base_T, cfg, dt)
    sol = solve_qp(problem)
    v = sol.x
    active = meta["active"]
    base_q = q if q_ref_prev is None else q_ref_prev
    q_ref = base_q.copy()
    q_ref[active] = base_q[active] + v[6:] * dt
    q_ref[active] = np.clip(q_ref[active], q[active] - 0.3, q[active] + 0.3)
    q_ref = np.clip(q_ref, model.limits_low, model.limits_high)
    high_res = float(np.max(np.abs(problem.A_eq @ v - problem.b_eq)))
    return WholeBodyResult(q_ref, v, sol, high_res, meta["com"])
