"""Joint-level control board emulation: six control modes at a 1 kHz tick.

Position tracks a min-jerk profile through a PID; position-direct applies
the raw reference (no acceleration shaping); velocity integrates its
reference into the position setpoint; torque adds feedforward and friction
compensation; current is a PI loop producing duty cycle; pwm is open loop.
PID is discrete positional form, derivative on measurement, anti-windup by
clamping.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .._kernels import servo_tick_batch
from ..config import LowlevelConfig
from ..model.robot import RobotModel


class ModeMismatch(ValueError):
    pass


class UnknownJoint(KeyError):
    pass


class ControlMode(IntEnum):
    POSITION = 0
    POSITION_DIRECT = 1
    VELOCITY = 2
    TORQUE = 3
    CURRENT = 4
    PWM = 5


# Modes that ride the brushless (EMS/2FOC) path only.
BRUSHLESS_ONLY = (ControlMode.TORQUE, ControlMode.CURRENT, ControlMode.PWM)
POSITION_FAMILY = (ControlMode.POSITION, ControlMode.POSITION_DIRECT, ControlMode.VELOCITY)


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    output_limit: float = 100.0
    integral_limit: float = 10.0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ValueError("gains must be >= 0")
        if self.output_limit <= 0 or self.integral_limit <= 0:
            raise ValueError("limits must be > 0")


@dataclass
class JointServoState:
    """Single-joint servo state; array boards are the production path."""

    mode: ControlMode = ControlMode.POSITION_DIRECT
    setpoint: float = 0.0
    integrator: float = 0.0
    prev_meas: float = 0.0
    meas_pos: float = 0.0
    meas_vel: float = 0.0
    meas_torque: float = 0.0
    meas_current: float = 0.0
    saturated: bool = False


def friction_feedforward(velocity: float, fc: float, fv: float) -> float:
    """Coulomb + viscous model; exactly zero at rest (sign(0) = 0)."""
    if velocity > 0.0:
        return fc + fv * velocity
    if velocity < 0.0:
        return -fc + fv * velocity
    return 0.0


def servo_tick(
    state: JointServoState,
    gains: PidGains,
    reference: float,
    dt: float = 0.001,
    fc: float = 0.0,
    fv: float = 0.0,
    minjerk=None,
    t: float = 0.0,
) -> float:
    """One tick of a single joint through the shared kernel.

    ``minjerk`` is the (q0, qf, T, t0) profile required by POSITION mode;
    other modes take ``reference`` directly.
    """
    if state.mode is ControlMode.POSITION and minjerk is None:
        raise ModeMismatch("POSITION mode needs a min-jerk profile")
    mj = minjerk if minjerk is not None else (0.0, 0.0, 1.0, 0.0)
    arrays = dict(
        mode=np.array([int(state.mode)], dtype=np.int8),
        setpoint=np.array([state.setpoint]),
        integrator=np.array([state.integrator]),
        prev_meas=np.array([state.prev_meas]),
        mj_q0=np.array([mj[0]]),
        mj_qf=np.array([mj[1]]),
        mj_T=np.array([mj[2]]),
        mj_t0=np.array([mj[3]]),
        ref=np.array([reference]),
        meas_pos=np.array([state.meas_pos]),
        meas_vel=np.array([state.meas_vel]),
        meas_torque=np.array([state.meas_torque]),
        meas_current=np.array([state.meas_current]),
        kp=np.array([gains.kp]),
        ki=np.array([gains.ki]),
        kd=np.array([gains.kd]),
        out_lim=np.array([gains.output_limit]),
        int_lim=np.array([gains.integral_limit]),
        fc=np.array([fc]),
        fv=np.array([fv]),
    )
    cmd = np.zeros(1)
    sat = np.zeros(1, dtype=np.uint8)
    trace = np.zeros((1, 1))
    servo_tick_batch(
        arrays["mode"], arrays["setpoint"], arrays["integrator"], arrays["prev_meas"],
        arrays["mj_q0"], arrays["mj_qf"], arrays["mj_T"], arrays["mj_t0"], arrays["ref"],
        arrays["meas_pos"], arrays["meas_vel"], arrays["meas_torque"], arrays["meas_current"],
        arrays["kp"], arrays["ki"], arrays["kd"], arrays["out_lim"], arrays["int_lim"],
        arrays["fc"], arrays["fv"], t, dt, 1, cmd, sat, trace,
    )
    state.setpoint = float(arrays["setpoint"][0])
    state.integrator = float(arrays["integrator"][0])
    state.prev_meas = float(arrays["prev_meas"][0])
    state.saturated = bool(sat[0])
    return float(cmd[0])


class ServoBoard:
    """One motor-control board: a block of joints ticked together at 1 kHz."""

    def __init__(
        self,
        name: str,
        board_type: str,  # "ems" (brushless) or "mc4plus" (DC)
        model: RobotModel,
        joint_indices: list[int],
        cfg: LowlevelConfig,
    ):
        self.name = name
        self.board_type = board_type
        self.model = model
        self.joints = list(joint_indices)
        self.cfg = cfg
        n = len(self.joints)
        self.mode = np.full(n, int(ControlMode.POSITION_DIRECT), dtype=np.int8)
        self.setpoint = np.zeros(n)
        self.integrator = np.zeros(n)
        self.prev_meas = np.zeros(n)
        self.mj_q0 = np.zeros(n)
        self.mj_qf = np.zeros(n)
        self.mj_T = np.ones(n)
        self.mj_t0 = np.zeros(n)
        self.ref = np.zeros(n)
        self.meas_pos = np.zeros(n)
        self.meas_vel = np.zeros(n)
        self.meas_torque = np.zeros(n)
        self.meas_current = np.zeros(n)
        self.kp = np.full(n, cfg.default_kp)
        self.ki = np.full(n, cfg.default_ki)
        self.kd = np.full(n, cfg.default_kd)
        self.out_lim = np.full(n, cfg.output_limit)
        self.int_lim = np.full(n, cfg.integral_limit)
        self.fc = np.full(n, cfg.friction_coulomb)
        self.fv = np.full(n, cfg.friction_viscous)
        self.cmd = np.zeros(n)
        self.sat = np.zeros(n, dtype=np.uint8)
        self.ticks = 0

    def local(self, model_index: int) -> int:
        try:
            return self.joints.index(model_index)
        except ValueError:
            raise UnknownJoint(self.model.joint_names[model_index]) from None

    def set_mode(self, model_index: int, mode: ControlMode) -> None:
        i = self.local(model_index)
        if mode in BRUSHLESS_ONLY and not self.model.brushless_mask[model_index]:
            raise ModeMismatch(
                f"{self.model.joint_names[model_index]} is DC-driven; {mode.name} unavailable"
            )
        old = ControlMode(int(self.mode[i]))
        if old is mode:
            return
        # Bumpless position-family switches: re-seed from the measurement so
        # the first tick sees zero error.
        if mode in POSITION_FAMILY:
            self.setpoint[i] = self.meas_pos[i]
            self.mj_q0[i] = self.meas_pos[i]
            self.mj_qf[i] = self.meas_pos[i]
            self.mj_T[i] = 1.0
            self.mj_t0[i] = 0.0
            self.prev_meas[i] = self.meas_pos[i]
        elif mode is ControlMode.TORQUE:
            self.prev_meas[i] = self.meas_torque[i]
        elif mode is ControlMode.CURRENT:
            self.prev_meas[i] = self.meas_current[i]
        self.mode[i] = int(mode)

    def set_reference(self, model_index: int, value: float, now: float) -> None:
        i = self.local(model_index)
        mode = ControlMode(int(self.mode[i]))
        if mode is ControlMode.POSITION:
            # New profile departs from the current profile position.
            here = _minjerk_pos(self.mj_q0[i], self.mj_qf[i], self.mj_T[i], self.mj_t0[i], now)
            self.mj_q0[i] = here
            self.mj_qf[i] = value
            self.mj_T[i] = self.cfg.position_ramp_time
            self.mj_t0[i] = now
        elif mode is ControlMode.POSITION_DIRECT:
            self.setpoint[i] = value
        else:
            self.ref[i] = value

    def update_measurements(self, q, dq=None, torque=None, current=None) -> None:
        idx = self.joints
        self.meas_pos[:] = np.asarray(q)[idx]
        if dq is not None:
            self.meas_vel[:] = np.asarray(dq)[idx]
        if torque is not None:
            self.meas_torque[:] = np.asarray(torque)[idx]
        if current is not None:
            self.meas_current[:] = np.asarray(current)[idx]

    def tick(self, t_start: float, n_ticks: int = 1) -> np.ndarray:
        """Run n 1 kHz ticks (measurements zero-order-held). Returns the
        command trace, shape (n_ticks, joints)."""
        trace = np.zeros((n_ticks, len(self.joints)))
        servo_tick_batch(
            self.mode, self.setpoint, self.integrator, self.prev_meas,
            self.mj_q0, self.mj_qf, self.mj_T, self.mj_t0, self.ref,
            self.meas_pos, self.meas_vel, self.meas_torque, self.meas_current,
            self.kp, self.ki, self.kd, self.out_lim, self.int_lim,
            self.fc, self.fv, t_start, self.cfg.board_dt, n_ticks,
            self.cmd, self.sat, trace,
        )
        self.ticks += n_ticks
        return trace

    def position_targets(self, now: float) -> np.ndarray:
        """Commanded position setpoints (what the kinematic plant tracks)."""
        out = np.empty(len(self.joints))
        for i in range(len(self.joints)):
            mode = int(self.mode[i])
            if mode == ControlMode.POSITION:
                out[i] = _minjerk_pos(self.mj_q0[i], self.mj_qf[i], self.mj_T[i], self.mj_t0[i], now)
            elif mode in (ControlMode.POSITION_DIRECT, ControlMode.VELOCITY):
                out[i] = self.setpoint[i]
            else:
                out[i] = self.meas_pos[i]  # torque/current/pwm: hold measured
        return out

    def snapshot(self, model_index: int) -> JointServoState:
        i = self.local(model_index)
        return JointServoState(
            mode=ControlMode(int(self.mode[i])),
            setpoint=float(self.setpoint[i]),
            integrator=float(self.integrator[i]),
            prev_meas=float(self.prev_meas[i]),
            meas_pos=float(self.meas_pos[i]),
            meas_vel=float(self.meas_vel[i]),
            meas_torque=float(self.meas_torque[i]),
            meas_current=float(self.meas_current[i]),
            saturated=bool(self.sat[i]),
        )


def _minjerk_pos(q0, qf, T, t0, t):
    tau = (t - t0) / T
    if tau >= 1.0:
        return qf
    if tau < 0.0:
        tau = 0.0
    t2 = tau * tau
    t3 = t2 * tau
    return q0 + (qf - q0) * (10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2)
