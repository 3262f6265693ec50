"""One config file holds every tunable constant across the stack.

Defaults ship in ``data/default.ini``; the CLI ``--config`` flag overlays a
user file on top. Sections mirror the module they feed.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class LocomotionConfig:
    gravity: float = 9.81
    com_height: float = 0.55
    step_period: float = 1.0
    ds_fraction: float = 0.3  # double-support share of a step
    max_step_length: float = 0.25
    step_width: float = 0.20
    max_speed: float = 0.25
    max_turn_rate: float = 0.4  # rad per step
    swing_height: float = 0.03
    rate_hz: float = 100.0
    k_zmp: float = 0.2  # proportional measured-ZMP correction
    k_dcm: float = 2.0  # DCM tracking gain
    zmp_margin_tol: float = 0.005
    plan_horizon_steps: int = 4
    step_in_place: bool = False
    qp_w_torso: float = 5.0
    qp_w_posture: float = 1.0
    qp_w_posture_legs: float = 0.05
    qp_ridge: float = 1e-6
    qp_posture_gain: float = 2.0
    qp_task_gain: float = 4.0
    qp_max_joint_vel: float = 4.0
    fz_contact_threshold: float = 50.0


@dataclass(frozen=True)
class LowlevelConfig:
    board_dt: float = 0.001
    wire_decimation: int = 10  # 1 kHz state decimated to 100 Hz
    default_kp: float = 20.0
    default_ki: float = 2.0
    default_kd: float = 0.05
    output_limit: float = 100.0
    integral_limit: float = 10.0
    friction_coulomb: float = 0.3
    friction_viscous: float = 0.1
    position_ramp_time: float = 0.5  # min-jerk duration for Position mode


@dataclass(frozen=True)
class RetargetingConfig:
    treadmill_deadzone: float = 0.05
    command_filter_tau: float = 0.3
    ik_damping: float = 0.05
    ik_tolerance: float = 1e-4
    ik_max_iterations: int = 50
    ik_posture_weight: float = 0.1
    calibration_max_variance: float = 0.05
    frame_rate_hz: float = 100.0


@dataclass(frozen=True)
class FeedbackConfig:
    haptic_min_duration_ms: float = 50.0
    routing_budget_ms: float = 10.0
    brake_max_n: float = 20.0
    vibration_full_scale_n: float = 5.0
    frame_rate_fps: float = 15.0
    latency_alarm_ms: float = 25.0
    latency_probe_hz: float = 20.0
    latency_window_s: float = 10.0


@dataclass(frozen=True)
class SimulatorConfig:
    dt: float = 0.01
    servo_tau: float = 0.03  # first-order joint tracking constant
    seed: int = 1


@dataclass(frozen=True)
class GatewayConfig:
    telemetry_rate_hz: float = 30.0
    port: int = 8591
    ws_port: int = 8592


DEFAULT_HAPTIC_MAP = {
    "left_upper_arm": "operator_left_arm",
    "right_upper_arm": "operator_right_arm",
    "left_hand": "operator_left_hand",
    "right_hand": "operator_right_hand",
}


@dataclass(frozen=True)
class AppConfig:
    locomotion: LocomotionConfig = LocomotionConfig()
    lowlevel: LowlevelConfig = LowlevelConfig()
    retargeting: RetargetingConfig = RetargetingConfig()
    feedback: FeedbackConfig = FeedbackConfig()
    simulator: SimulatorConfig = SimulatorConfig()
    gateway: GatewayConfig = GatewayConfig()
    haptic_map: dict = None  # patch -> operator node; filled by load_config

    def __post_init__(self):
        if self.haptic_map is None:
            object.__setattr__(self, "haptic_map", dict(DEFAULT_HAPTIC_MAP))


_SECTIONS = {
    "locomotion": LocomotionConfig,
    "lowlevel": LowlevelConfig,
    "retargeting": RetargetingConfig,
    "feedback": FeedbackConfig,
    "simulator": SimulatorConfig,
    "gateway": GatewayConfig,
}


def default_config_path() -> Path:
    return Path(str(resources.files("avatarkit").joinpath("data/default.ini")))


def load_config(path: str | Path | None = None) -> AppConfig:
    """Parse defaults, then overlay ``path`` when given."""
    parser = configparser.ConfigParser()
    with default_config_path().open() as fh:
        parser.read_file(fh)
    if path is not None:
        if not parser.read(str(path)):
            raise FileNotFoundError(path)
    kwargs = {}
    for section, cls in _SECTIONS.items():
        values = {}
        for f in fields(cls):
            raw = parser.get(section, f.name)
            if f.type == "int":
                values[f.name] = parser.getint(section, f.name)
            elif f.type == "bool":
                values[f.name] = parser.getboolean(section, f.name)
            else:
                values[f.name] = float(raw)
        kwargs[section] = cls(**values)
    if parser.has_section("haptic_map"):
        kwargs["haptic_map"] = dict(parser["haptic_map"])
    return AppConfig(**kwargs)


def dump_config(cfg: AppConfig) -> str:
    lines = []
    for section, sub in (
        ("locomotion", cfg.locomotion),
        ("lowlevel", cfg.lowlevel),
        ("retargeting", cfg.retargeting),
        ("feedback", cfg.feedback),
        ("simulator", cfg.simulator),
        ("gateway", cfg.gateway),
    ):
        lines.append(f"[{section}]")
        for f in fields(sub):
            lines.append(f"{f.name} = {getattr(sub, f.name)}")
        lines.append("")
    return "\n".join(lines)
