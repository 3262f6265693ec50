"""Operator retargeting: calibration, arm IK round trips, channel maps,
session recording."""

import numpy as np
import pytest

from avatarkit.model.kinematics import chain_fk, chain_joint_indices
from avatarkit.model.rotations import mat_to_quat, quat_to_mat, rot_y, rot_z
from avatarkit.retargeting import (
    Calibration,
    LocomotionFilter,
    OperatorFrame,
    OperatorMoving,
    Retargeter,
    UnknownExpression,
    calibrate,
    frame_to_line,
    line_to_frame,
    neutral_frame,
    retarget_arm_orientations,
    retarget_face,
    retarget_fingers,
    retarget_head,
)
from avatarkit.retargeting.frames import NODE_NAMES


def n_pose_frames(n=120, dt=0.01):
    return [neutral_frame(t=k * dt) for k in range(n)]


def neutral_calibration(cfg):
    return calibrate(n_pose_frames(), cfg.retargeting.calibration_max_variance)


# -- calibration -----------------------------------------------------------------


def test_calibration_pose_maps_to_zero_posture(model, cfg):
    cal = neutral_calibration(cfg)
    ret = Retargeter(model, cfg.retargeting, cal, cfg.locomotion.max_speed)
    refs = ret.process(neutral_frame(t=2.0))
    for side in ("left", "right"):
        arm = refs.posture_ref[model.group_slice(f"{side}_arm")]
        assert np.max(np.abs(arm)) < 1e-6
    assert np.max(np.abs(refs.posture_ref[model.group_slice("torso")])) < 1e-9


def test_calibration_deterministic(cfg):
    a = neutral_calibration(cfg)
    b = neutral_calibration(cfg)
    for node in NODE_NAMES:
        assert np.array_equal(a.node_alignments[node], b.node_alignments[node])


def test_calibration_rejects_moving_operator(cfg):
    frames = n_pose_frames(60)
    moved = {n: np.array([1.0, 0, 0, 0]) for n in NODE_NAMES}
    moved["left_forearm"] = mat_to_quat(rot_y(0.3))  # 0.3 rad excursion
    frames.append(OperatorFrame(timestamp=0.6, node_orientations=moved))
    with pytest.raises(OperatorMoving):
        calibrate(frames, cfg.retargeting.calibration_max_variance)


# -- arm IK ----------------------------------------------------------------------


def test_elbow_quarter_turn(model, cfg):
    # Forearm node rotated 90 degrees about the elbow axis relative to the
    # upper arm: the elbow joint recovers pi/2.
    R_ua = np.eye(3)
    R_fa = rot_y(np.pi / 2)
    res = retarget_arm_orientations(model, "left", R_ua, R_fa, cfg.retargeting)
    elbow = res.joints[3]
    assert elbow == pytest.approx(np.pi / 2, abs=1e-3)
    assert res.converged


def test_unreachable_orientation_clamps_with_flag(model, cfg):
    # Elbow twist beyond the joint limit: clamped result plus clamp flag and
    # a reported orientation error.
    R_ua = np.eye(3)
    R_fa = rot_y(-1.2)  # elbow limit is -0.1
    res = retarget_arm_orientations(model, "left", R_ua, R_fa, cfg.retargeting)
    assert res.clamped
    assert not res.converged
    assert res.error_rad > 0.5
    lo = model.limits_low[model.index_of("left_arm.elbow")]
    assert res.joints[3] == pytest.approx(lo, abs=1e-9)


def test_round_trip_random_postures(model, cfg, rng):
    # FK-derived node orientations retarget back; non-null-space joints
    # (shoulder triplet + elbow) match to 1e-3 rad.
    for side in ("left", "right"):
        idx = chain_joint_indices(model, f"{side}_arm")
        lo = model.limits_low[idx]
        hi = model.limits_high[idx]
        for _ in range(50):
            q = model.zero_vector()
            qa = lo + rng.uniform(0.08, 0.92, 7) * (hi - lo)
            qa[4:] = 0.0  # wrists are documented null space
            q[idx] = qa
            fk = chain_fk(model, f"{side}_arm", q, validate=False)
            res = retarget_arm_orientations(
                model, side, fk["upper_arm"][:3, :3], fk["forearm"][:3, :3], cfg.retargeting
            )
            assert np.max(np.abs(res.joints[:4] - qa[:4])) < 1e-3


# -- channel maps -----------------------------------------------------------------


def test_finger_map_open_and_fist():
    assert np.array_equal(retarget_fingers(np.zeros(5)), np.zeros(9))
    assert np.array_equal(retarget_fingers(np.ones(5)), np.ones(9))


def test_finger_coupling_is_mean():
    motors = retarget_fingers(np.array([0.0, 0.0, 0.0, 1.0, 0.0]))
    assert motors[7] == motors[8] == pytest.approx(0.5)
    assert np.all(motors[:7] == 0.0)


def test_finger_map_monotone(rng):
    a = rng.uniform(0, 1, 5)
    b = np.minimum(a + 0.2, 1.0)
    assert np.all(retarget_fingers(b) >= retarget_fingers(a) - 1e-12)


def test_face_patterns():
    assert retarget_face("neutral") == 0
    assert retarget_face("smile") == 1
    with pytest.raises(UnknownExpression):
        retarget_face("smirk")


def test_head_neutral_and_eyelids(model, cfg):
    cal = neutral_calibration(cfg)
    frame = neutral_frame(t=2.0)
    head = retarget_head(model, frame, cal)
    assert head["neck.neck_yaw"] == 0.0
    assert head["head.eyelids"] == 0.0  # openness 1 -> fully open
    frame.eye_openness = 0.0
    head = retarget_head(model, frame, cal)
    eyelid_hi = model.limits_high[model.index_of("head.eyelids")]
    assert head["head.eyelids"] == eyelid_hi  # closed limit


def test_head_yaw_passthrough(model, cfg):
    cal = neutral_calibration(cfg)
    frame = neutral_frame(t=2.0)
    frame.head_orientation = mat_to_quat(rot_z(np.deg2rad(30)))
    head = retarget_head(model, frame, cal)
    assert head["neck.neck_yaw"] == pytest.approx(np.deg2rad(30), abs=1e-9)


# -- locomotion command ------------------------------------------------------------


def test_deadzone_and_zero(cfg):
    f = LocomotionFilter(cfg.retargeting, max_speed=0.25)
    cmd = f.update(0.0, 0.0, t=0.0)
    assert cmd.speed == 0.0
    for k in range(100):
        cmd = f.update(0.03, 0.0, t=0.01 * (k + 1))  # inside the deadzone
    assert cmd.speed == 0.0


def test_step_response_three_tau(cfg):
    # First-order filter closed form: after 3 tau the response passes 95%.
    f = LocomotionFilter(cfg.retargeting, max_speed=0.25)
    f.update(0.0, 0.0, t=0.0)
    tau = cfg.retargeting.command_filter_tau
    t = 0.0
    while t < 3 * tau - 1e-9:
        t += 0.01
        cmd = f.update(0.2, 0.0, t=t)
    assert cmd.speed >= 0.19
    assert cmd.speed < 0.2


def test_speed_clamped_to_max(cfg):
    f = LocomotionFilter(cfg.retargeting, max_speed=0.25)
    f.update(0.0, 0.0, t=0.0)
    for k in range(2000):
        cmd = f.update(3.0, 0.1, t=0.01 * (k + 1))
    assert cmd.speed <= 0.25
    assert cmd.heading == pytest.approx(0.1)


# -- whole-frame processing ----------------------------------------------------------


def test_refs_respect_limits_and_determinism(model, cfg, rng):
    cal = neutral_calibration(cfg)

    def random_frame(t):
        rng_local = np.random.default_rng(int(t * 1000))
        nodes = {}
        for name in NODE_NAMES:
            v = rng_local.normal(size=4)
            nodes[name] = v / np.linalg.norm(v)
        return OperatorFrame(
            timestamp=t,
            node_orientations=nodes,
            head_orientation=mat_to_quat(rot_z(rng_local.uniform(-1, 1))),
            gaze=tuple(rng_local.uniform(-0.5, 0.5, 3)),
            eye_openness=rng_local.uniform(0, 1),
            finger_flexions={"left": rng_local.uniform(0, 1, 5), "right": rng_local.uniform(0, 1, 5)},
            treadmill_speed=rng_local.uniform(0, 0.5),
            treadmill_heading=rng_local.uniform(-np.pi, np.pi),
            expression="smile",
        )

    runs = []
    for _ in range(2):
        ret = Retargeter(model, cfg.retargeting, cal, cfg.locomotion.max_speed)
        out = []
        for k in range(20):
            refs = ret.process(random_frame(0.01 * (k + 1)))
            merged = refs.merged_joint_targets(model)
            model.validate(merged)  # hard limit guarantee
            out.append(merged)
        runs.append(np.array(out))
    assert np.array_equal(runs[0], runs[1])


# -- session recording ----------------------------------------------------------------


def test_session_line_roundtrip_bit_exact(rng):
    frame = neutral_frame(t=1.2345678901234567)
    frame.node_orientations["chest"] = np.array([np.sqrt(0.5), 0.0, np.sqrt(0.5), 0.0])
    frame.finger_flexions["left"] = rng.uniform(0, 1, 5)
    frame.treadmill_speed = 0.123456789012345678
    back = line_to_frame(frame_to_line(frame))
    assert back.timestamp == frame.timestamp
    assert np.array_equal(back.node_orientations["chest"], frame.node_orientations["chest"])
    assert np.array_equal(back.finger_flexions["left"], frame.finger_flexions["left"])
    assert back.treadmill_speed == frame.treadmill_speed


def test_session_file_roundtrip(tmp_path):
    from avatarkit.retargeting import record_session, replay_session

    frames = [neutral_frame(t=0.01 * k) for k in range(25)]
    path = tmp_path / "session.txt"
    assert record_session(frames, path) == 25
    back = list(replay_session(path))
    assert len(back) == 25
    assert all(a.timestamp == b.timestamp for a, b in zip(frames, back))
