"""Backend parity and kernel-level properties.

The compiled extension and the pure fallback must produce identical float64
results: both run the same operation sequence and neither evaluates
transcendentals internally.
"""

import numpy as np
import pytest

from avatarkit._kernels import BACKEND, pure

try:
    from avatarkit._kernels import _fast
except ImportError:
    _fast = None

needs_fast = pytest.mark.skipif(_fast is None, reason="compiled kernels unavailable")


def _minjerk_args(rng, n=257):
    q0 = rng.normal(size=n)
    qf = rng.normal(size=n)
    T = rng.uniform(0.05, 3.0, n)
    t0 = rng.uniform(-1.0, 1.0, n)
    t = t0 + rng.uniform(-0.5, 4.0, n)
    t = np.maximum(t, t0)
    return q0, qf, T, t0, t


@needs_fast
def test_minjerk_backend_parity(rng):
    q0, qf, T, t0, t = _minjerk_args(rng)
    outs = []
    for impl in (pure, _fast):
        pos = np.empty_like(q0)
        vel = np.empty_like(q0)
        acc = np.empty_like(q0)
        impl.minjerk_batch(q0, qf, T, t0, t, pos, vel, acc)
        outs.append((pos.copy(), vel.copy(), acc.copy()))
    for a, b in zip(*outs):
        assert np.array_equal(a, b)


def _servo_arrays(rng, n=54):
    return dict(
        mode=rng.integers(0, 6, n).astype(np.int8),
        setpoint=rng.normal(size=n),
        integrator=rng.normal(size=n) * 0.1,
        prev_meas=rng.normal(size=n),
        mj_q0=rng.normal(size=n),
        mj_qf=rng.normal(size=n),
        mj_T=rng.uniform(0.1, 2.0, n),
        mj_t0=np.zeros(n),
        ref=rng.normal(size=n),
        meas_pos=rng.normal(size=n),
        meas_vel=rng.normal(size=n),
        meas_torque=rng.normal(size=n),
        meas_current=rng.normal(size=n),
        kp=rng.uniform(0, 30, n),
        ki=rng.uniform(0, 5, n),
        kd=rng.uniform(0, 0.2, n),
        out_lim=rng.uniform(5, 50, n),
        int_lim=rng.uniform(1, 10, n),
        fc=rng.uniform(0, 1, n),
        fv=rng.uniform(0, 0.5, n),
    )


@needs_fast
def test_servo_backend_parity(rng):
    base = _servo_arrays(rng)
    results = []
    for impl in (pure, _fast):
        arrays = {k: v.copy() for k, v in base.items()}
        n = arrays["mode"].shape[0]
        cmd = np.zeros(n)
        sat = np.zeros(n, dtype=np.uint8)
        trace = np.zeros((25, n))
        impl.servo_tick_batch(
            arrays["mode"], arrays["setpoint"], arrays["integrator"], arrays["prev_meas"],
            arrays["mj_q0"], arrays["mj_qf"], arrays["mj_T"], arrays["mj_t0"], arrays["ref"],
            arrays["meas_pos"], arrays["meas_vel"], arrays["meas_torque"], arrays["meas_current"],
            arrays["kp"], arrays["ki"], arrays["kd"], arrays["out_lim"], arrays["int_lim"],
            arrays["fc"], arrays["fv"], 0.25, 0.001, 25, cmd, sat, trace,
        )
        results.append((trace.copy(), cmd.copy(), sat.copy(), arrays["setpoint"], arrays["integrator"]))
    for a, b in zip(*results):
        assert np.array_equal(a, b)


@needs_fast
def test_lipm_backend_parity(rng):
    n = 400
    p = rng.normal(size=n) * 0.1
    a = float(np.exp(4.22 * 0.01))
    b = 1.0 / a
    s = float(np.sinh(4.22 * 0.01))
    outs = []
    for impl in (pure, _fast):
        dcm = np.zeros(n + 1)
        impl.dcm_backward(p, 0.123, a, dcm)
        com = np.zeros(n + 1)
        vel = np.zeros(n + 1)
        impl.lipm_com_rollout(dcm, p, -0.05, b, s, 4.22, com, vel)
        outs.append((dcm.copy(), com.copy(), vel.copy()))
    for x, y in zip(*outs):
        assert np.array_equal(x, y)


def test_backend_reports_name():
    assert BACKEND in ("compiled", "pure")


def test_dcm_backward_inverts_forward(rng):
    # The backward pass is the exact inverse of the forward DCM recurrence.
    n = 120
    p = rng.normal(size=n)
    a = 1.043
    dcm = np.zeros(n + 1)
    pure.dcm_backward(p, 0.4, a, dcm)
    forward = dcm[0]
    for k in range(n):
        forward = p[k] + a * (forward - p[k])
        assert forward == pytest.approx(dcm[k + 1], abs=1e-9)
    assert dcm[-1] == 0.4
