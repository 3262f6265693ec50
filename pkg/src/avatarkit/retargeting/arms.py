"""Geometric arm retargeting: damped-least-squares orientation IK.

Targets are the calibrated upper-arm and forearm orientations relative to
the chest; the 7-DoF arm is resolved with a small joint-center regularizer
(the wrist triplet does not affect the two targets and is documented
null space, pinned toward center).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import RetargetingConfig
from ..model.kinematics import chain_fk, chain_jacobian, chain_joint_indices
from ..model.robot import RobotModel
from ..model.rotations import log_so3

NULL_SPACE_JOINTS = ("wrist_yaw", "wrist_pitch", "wrist_roll")


@dataclass
class ArmIkResult:
    joints: np.ndarray  # 7 values in chain order
    error_rad: float  # combined orientation log-map error norm
    converged: bool
    clamped: bool
    iterations: int


def retarget_arm_orientations(
    model: RobotModel,
    side: str,
    R_upper_target: np.ndarray,
    R_forearm_target: np.ndarray,
    cfg: RetargetingConfig,
    seed: np.ndarray | None = None,
) -> ArmIkResult:
    chain = f"{side}_arm"
    idx = chain_joint_indices(model, chain)
    lo = model.limits_low[idx]
    hi = model.limits_high[idx]
    center = (lo + hi) / 2.0
    q = model.zero_vector()
    if seed is not None:
        q[idx] = np.clip(seed, lo, hi)

    lam2 = cfg.ik_damping**2
    w_reg = cfg.ik_posture_weight
    best = None
    clamped_any = False
    for it in range(1, cfg.ik_max_iterations + 1):
        fk = chain_fk(model, chain, q, validate=False)
        e = np.concatenate(
            [
                log_so3(R_upper_target @ fk["upper_arm"][:3, :3].T),
                log_so3(R_forearm_target @ fk["forearm"][:3, :3].T),
            ]
        )
        err = float(np.linalg.norm(e))
        if best is None or err < best[0]:
            best = (err, q[idx].copy(), it)
        if err < cfg.ik_tolerance:
            return ArmIkResult(q[idx].copy(), err, True, clamped_any, it)
        J = np.zeros((6, len(idx)))
        for row_block, link in ((0, "upper_arm"), (3, "forearm")):
            Jc, cols = chain_jacobian(model, chain, q, link)
            for c, j in enumerate(cols):
                J[row_block : row_block + 3, idx.index(j)] = Jc[3:, c]
        # Damped task step; the joint-center pull applies only to joints the
        # targets cannot see (zero Jacobian columns: the wrist triplet), so
        # redundancy resolution can never bias the orientation error.
        A = J.T @ J + lam2 * np.eye(len(idx))
        step = np.linalg.solve(A, J.T @ e)
        null_cols = np.linalg.norm(J, axis=0) < 1e-12
        step[null_cols] += w_reg * (center - q[idx])[null_cols]
        new = q[idx] + step
        clipped = np.clip(new, lo, hi)
        if np.any(clipped != new):
            clamped_any = True
        q[idx] = clipped
    err, joints, it = best
    return ArmIkResult(joints, err, False, clamped_any, cfg.ik_max_iterations)
