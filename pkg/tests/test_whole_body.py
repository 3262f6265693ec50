"""Whole-body stack-of-tasks QP: fixed points, priority semantics, Jacobians."""

import numpy as np
import pytest
from dataclasses import replace

from avatarkit.locomotion import (
    TaskStack,
    assemble_whole_body_qp,
    com_and_jacobian,
    frame_jacobian,
    solve_whole_body_qp,
)
from avatarkit.model.kinematics import fk_world, transform
from avatarkit.sim.stack import standing_posture


def zero_residual_stack(model, q, base):
    frames = fk_world(model, q, base)
    com, _ = com_and_jacobian(model, q, base, frames)
    return TaskStack(
        com_ref=com[:2].copy(),
        com_vel_ref=np.zeros(2),
        foot_refs={
            "left": frames["left_leg/sole"].copy(),
            "right": frames["right_leg/sole"].copy(),
        },
        foot_vel_refs={"left": np.zeros(6), "right": np.zeros(6)},
        root_height_ref=float(base[2, 3]),
        torso_R_ref=frames["chest"][:3, :3].copy(),
        posture_ref=q.copy(),
    )


@pytest.fixture()
def standing(model):
    q = standing_posture(model)
    frames = fk_world(model, q)
    base = transform(p=[0, 0, -float(frames["left_leg/sole"][2, 3])])
    return q, base


def test_zero_residual_fixed_point(model, cfg, standing):
    # All task references equal to the current state: solution is v = 0 and
    # the reference equals the current posture.
    q, base = standing
    stack = zero_residual_stack(model, q, base)
    result = solve_whole_body_qp(model, stack, q, base, cfg.locomotion, 0.01)
    assert np.allclose(result.velocity, 0.0, atol=1e-8)
    assert np.allclose(result.q_ref, q, atol=1e-10)
    assert result.high_residual < 1e-10


def test_high_priority_invariant_under_low_weights(model, cfg, standing):
    # Perturbing low-priority weights never changes the residual of the
    # satisfied high-priority constraints.
    q, base = standing
    stack = zero_residual_stack(model, q, base)
    stack.posture_ref = q + 0.1  # nonzero low-priority pull
    residuals = []
    for w_torso, w_post in ((5.0, 1.0), (0.5, 10.0), (50.0, 0.01)):
        loco = replace(cfg.locomotion, qp_w_torso=w_torso, qp_w_posture=w_post)
        result = solve_whole_body_qp(model, stack, q, base, loco, 0.01)
        residuals.append(result.high_residual)
    assert all(r < 1e-7 for r in residuals)


def test_posture_ref_only_affects_cost(model, cfg, standing):
    # Retargeting output feeds only the low-priority regularization: the QP
    # constraint blocks are bit-identical for different posture references.
    q, base = standing
    stack_a = zero_residual_stack(model, q, base)
    stack_b = zero_residual_stack(model, q, base)
    stack_b.posture_ref = q + 0.2
    pa, _ = assemble_whole_body_qp(model, stack_a, q, base, cfg.locomotion, 0.01)
    pb, _ = assemble_whole_body_qp(model, stack_b, q, base, cfg.locomotion, 0.01)
    assert np.array_equal(pa.A_eq, pb.A_eq)
    assert np.array_equal(pa.b_eq, pb.b_eq)
    assert np.array_equal(pa.A_in, pb.A_in)
    assert np.array_equal(pa.b_in, pb.b_in)
    assert not np.array_equal(pa.g, pb.g)  # only the cost moves


def test_velocity_bounds_enforced(model, cfg, standing):
    q, base = standing
    stack = zero_residual_stack(model, q, base)
    stack.posture_ref = q.copy()
    stack.posture_ref[model.index_of("right_arm.shoulder_pitch")] = -1.5
    loco = replace(cfg.locomotion, qp_posture_gain=500.0)  # ask for a huge velocity
    result = solve_whole_body_qp(model, stack, q, base, loco, 0.01)
    assert np.max(np.abs(result.velocity[6:])) <= loco.qp_max_joint_vel + 1e-9


def test_solution_tracks_com_shift(model, cfg, standing):
    q, base = standing
    stack = zero_residual_stack(model, q, base)
    stack.com_ref = stack.com_ref + np.array([0.01, 0.0])
    result = solve_whole_body_qp(model, stack, q, base, cfg.locomotion, 0.01)
    # CoM task velocity responds in +x.
    frames = fk_world(model, q, base)
    _, J_com = com_and_jacobian(model, q, base, frames)
    cols = list(range(6)) + [6 + j for j in __import__("avatarkit.locomotion.whole_body", fromlist=["active_joint_indices"]).active_joint_indices(model)]
    vel_com = J_com[:, cols] @ result.velocity
    assert vel_com[0] > 1e-4


def test_frame_jacobian_matches_finite_differences(model, rng, standing):
    q, base = standing
    delta = 1e-6
    frames = fk_world(model, q, base)
    for frame in ("left_leg/sole", "right_arm/hand", "chest", "neck_head/head"):
        J = frame_jacobian(model, q, base, frames, frame)
        for j in rng.choice(model.dof, size=8, replace=False):
            qp = q.copy()
            qm = q.copy()
            qp[j] += delta
            qm[j] -= delta
            Tp = fk_world(model, qp, base)[frame]
            Tm = fk_world(model, qm, base)[frame]
            dpos = (Tp[:3, 3] - Tm[:3, 3]) / (2 * delta)
            assert np.allclose(J[:3, 6 + j], dpos, atol=1e-5)


def test_com_jacobian_matches_finite_differences(model, standing):
    q, base = standing
    delta = 1e-6
    frames = fk_world(model, q, base)
    com0, J = com_and_jacobian(model, q, base, frames)
    for j in (model.index_of("torso.torso_pitch"), model.index_of("left_leg.knee"),
              model.index_of("right_arm.shoulder_pitch")):
        qp = q.copy()
        qm = q.copy()
        qp[j] += delta
        qm[j] -= delta
        cp, _ = com_and_jacobian(model, qp, base, fk_world(model, qp, base))
        cm, _ = com_and_jacobian(model, qm, base, fk_world(model, qm, base))
        fd = (cp - cm) / (2 * delta)
        assert np.allclose(J[:, 6 + j], fd, atol=1e-5)
