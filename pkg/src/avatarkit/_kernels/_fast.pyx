# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: same arithmetic as ``pure.py``, op for op."""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


cdef inline double _clip01(double x) nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


def minjerk_batch(double[:] q0, double[:] qf, double[:] T, double[:] t0,
                  double[:] t, double[:] out_pos, double[:] out_vel,
                  double[:] out_acc):
    cdef Py_ssize_t i, n = q0.shape[0]
    cdef double d, tau, t2, t3, t4, t5
    for i in range(n):
        d = qf[i] - q0[i]
        tau = _clip01((t[i] - t0[i]) / T[i])
        if tau >= 1.0:
            out_pos[i] = qf[i]
            out_vel[i] = 0.0
            out_acc[i] = 0.0
        else:
            t2 = tau * tau
            t3 = t2 * tau
            t4 = t3 * tau
            t5 = t4 * tau
            out_pos[i] = q0[i] + d * (10.0 * t3 - 15.0 * t4 + 6.0 * t5)
            out_vel[i] = d * (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / T[i]
            out_acc[i] = d * (60.0 * tau - 180.0 * t2 + 120.0 * t3) / (T[i] * T[i])


cdef inline double _minjerk_scalar(double q0, double qf, double T,
                                   double t0, double t) nogil:
    cdef double tau = (t - t0) / T
    cdef double t2, t3, t4, t5
    if tau >= 1.0:
        return qf
    if tau < 0.0:
        tau = 0.0
    t2 = tau * tau
    t3 = t2 * tau
    t4 = t3 * tau
    t5 = t4 * tau
    return q0 + (qf - q0) * (10.0 * t3 - 15.0 * t4 + 6.0 * t5)


def servo_tick_batch(signed char[:] mode, double[:] setpoint,
                     double[:] integrator, double[:] prev_meas,
                     double[:] mj_q0, double[:] mj_qf, double[:] mj_T,
                     double[:] mj_t0, double[:] ref, double[:] meas_pos,
                     double[:] meas_vel, double[:] meas_torque,
                     double[:] meas_current, double[:] kp, double[:] ki,
                     double[:] kd, double[:] out_lim, double[:] int_lim,
                     double[:] fc, double[:] fv, double t_start, double dt,
                     int n_ticks, double[:] out_cmd, unsigned char[:] out_sat,
                     double[:, :] out_trace):
    cdef Py_ssize_t i, n = mode.shape[0]
    cdef int k, m, sat
    cdef double t, u, err, acc, y, v, fric, target
    for k in range(n_ticks):
        t = t_start + k * dt
        for i in range(n):
            m = mode[i]
            sat = 0
            if m == 5:
                u = ref[i]
                if u > 1.0:
                    u = 1.0
                    sat = 1
                elif u < -1.0:
                    u = -1.0
                    sat = 1
            elif m == 4:
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
            elif m == 3:
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
            else:
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


def dcm_backward(double[:] p, double dcm_end, double a, double[:] out):
    cdef Py_ssize_t k, n = p.shape[0]
    out[n] = dcm_end
    for k in range(n - 1, -1, -1):
        out[k] = p[k] + (out[k + 1] - p[k]) / a


def lipm_com_rollout(double[:] dcm, double[:] p, double x0, double b,
                     double s, double omega, double[:] out_com,
                     double[:] out_vel):
    cdef Py_ssize_t k, n = p.shape[0]
    out_com[0] = x0
    out_vel[0] = omega * (dcm[0] - x0)
    for k in range(n):
        out_com[k + 1] = b * out_com[k] + p[k] * (1.0 - b) + (dcm[k] - p[k]) * s
        out_vel[k + 1] = omega * (dcm[k + 1] - out_com[k + 1])
