"""Pure-Python fallback kernels.

Mirrors the arithmetic of the compiled extension operation-for-operation so
the two backends produce bit-identical float64 results. No transcendentals
are evaluated here: callers precompute exp/sinh constants.
"""

import numpy as np


def minjerk_batch(q0, qf, T, t0, t, out_pos, out_vel, out_acc):
    """Evaluate rest-to-rest quintic profiles elementwise.

    All arguments are equal-length float64 1-D arrays. Positions hold the
    final value exactly once the normalized time reaches 1; velocity and
    acceleration are the analytic derivatives (zero at both boundaries).
    """
    d = qf - q0
    tau = np.clip((t - t0) / T, 0.0, 1.0)
    t2 = tau * tau
    t3 = t2 * tau
    t4 = t3 * tau
    t5 = t4 * tau
    done = tau >= 1.0
    s = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
    np.copyto(out_pos, np.where(done, qf, q0 + d * s))
    np.copyto(out_vel, np.where(done, 0.0, d * (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / T))
    np.copyto(out_acc, np.where(done, 0.0, d * (60.0 * tau - 180.0 * t2 + 120.0 * t3) / (T * T)))


def _minjerk_scalar(q0, qf, T, t0, t):
    tau = (t - t0) / T
    if tau >= 1.0:
        return qf
    if tau < 0.0:
        tau = 0.0
    t2 = tau * tau
    t3 = t2 * tau
    t4 = t3 * tau
    t5 = t4 * tau
    return q0 + (qf - q0) * (10.0 * t3 - 15.0 * t4 + 6.0 * t5)


def servo_tick_batch(
    mode,
    setpoint,
    integrator,
    prev_meas,
    mj_q0,
    mj_qf,
    mj_T,
    mj_t0,
    ref,
    meas_pos,
    meas_vel,
    meas_torque,
    meas_current,
    kp,
    ki,
    kd,
    out_lim,
    int_lim,
    fc,
    fv,
    t_start,
    dt,
    n_ticks,
    out_cmd,
    out_sat,
    out_trace,
):
    """Run ``n_ticks`` servo ticks for one board's joints.

    Measurements are zero-order-held across the ticks. ``setpoint``,
    ``integrator`` and ``prev_meas`` are updated in place; ``out_trace`` is
    (n_ticks, n) and records every command. PID is discrete positional form
    with derivative on measurement and clamped anti-windup.

    Mode codes: 0 position (min-jerk reference), 1 position-direct,
    2 velocity (reference integrated into the setpoint), 3 torque
    (PID + feedforward + friction), 4 current (PI, duty in [-1, 1]),
    5 pwm (open-loop duty).
    """
    n = mode.shape[0]
    for k in range(n_ticks):
        t = t_start + k * dt
        for i in range(n):
            m = mode[i]
            sat = 0
            if m == 5:  # pwm: open loop
                u = ref[i]
                if u > 1.0:
                    u = 1.0
                    sat = 1
                elif u < -1.0:
                    u = -1.0
                    sat = 1
            elif m == 4:  # current: PI on measured current
                err = ref[i] - meas_current[i]
                acc = integrator[i] + ki[i] * err * dt
                if acc > int_lim[i]:
                    acc = int_lim[i]
                elif acc < -int_lim[i]:
                    acc = -int_lim[i]
                integrator[i] = acc
                u = kp[i] * err + acc
                if u > 1.0:
                    u = 1.0
                    sat = 1
                elif u < -1.0:
                    u = -1.0
                    sat = 1
                prev_meas[i] = meas_current[i]
            elif m == 3:  # torque: PID + feedforward + friction compensation
                y = meas_torque[i]
                err = ref[i] - y
                acc = integrator[i] + ki[i] * err * dt
                if acc > int_lim[i]:
                    acc = int_lim[i]
                elif acc < -int_lim[i]:
                    acc = -int_lim[i]
                integrator[i] = acc
                v = meas_vel[i]
                if v > 0.0:
                    fric = fc[i] + fv[i] * v
                elif v < 0.0:
                    fric = -fc[i] + fv[i] * v
                else:
                    fric = 0.0
                u = kp[i] * err + acc - kd[i] * (y - prev_meas[i]) / dt + ref[i] + fric
                if u > out_lim[i]:
                    u = out_lim[i]
                    sat = 1
                elif u < -out_lim[i]:
                    u = -out_lim[i]
                    sat = 1
                prev_meas[i] = y
            else:  # position-family modes close the loop on measured position
                if m == 0:
                    target = _minjerk_scalar(mj_q0[i], mj_qf[i], mj_T[i], mj_t0[i], t)
                elif m == 2:
                    setpoint[i] = setpoint[i] + ref[i] * dt
                    target = setpoint[i]
                else:
                    target = setpoint[i]
                y = meas_pos[i]
                err = target - y
                acc = integrator[i] + ki[i] * err * dt
                if acc > int_lim[i]:
                    acc = int_lim[i]
                elif acc < -int_lim[i]:
                    acc = -int_lim[i]
                integrator[i] = acc
                u = kp[i] * err + acc - kd[i] * (y - prev_meas[i]) / dt
                if u > out_lim[i]:
                    u = out_lim[i]
                    sat = 1
                elif u < -out_lim[i]:
                    u = -out_lim[i]
                    sat = 1
                prev_meas[i] = y
            out_trace[k, i] = u
            out_cmd[i] = u
            out_sat[i] = sat


def dcm_backward(p, dcm_end, a, out):
    """Backward recursion placing the final DCM sample on ``dcm_end``.

    ``p`` is the per-tick ZMP reference (length N), ``a = exp(omega*dt)``,
    ``out`` has length N+1.
    """
    n = p.shape[0]
    out[n] = dcm_end
    for k in range(n - 1, -1, -1):
        out[k] = p[k] + (out[k + 1] - p[k]) / a


def lipm_com_rollout(dcm, p, x0, b, s, omega, out_com, out_vel):
    """Integrate the stable CoM dynamics along a DCM/ZMP sample pair.

    ``b = exp(-omega*dt)``, ``s = sinh(omega*dt)``; exact per-tick closed
    form for piecewise-constant ZMP. ``dcm`` has length N+1, ``p`` length N.
    """
    n = p.shape[0]
    out_com[0] = x0
    out_vel[0] = omega * (dcm[0] - x0)
    for k in range(n):
        out_com[k + 1] = b * out_com[k] + p[k] * (1.0 - b) + (dcm[k] - p[k]) * s
        out_vel[k + 1] = omega * (dcm[k + 1] - out_com[k + 1])
