"""Footstep planning: unicycle rollout from walking commands.

The ring heading steers the unicycle with a per-step turn clamp; step length
is speed times the step period, clamped; footholds alternate half the step
width to either side of the unicycle path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import LocomotionConfig
from ..model.rotations import wrap_angle


class SpeedOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class WalkingCommand:
    heading: float = 0.0
    speed: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))
        if self.speed < 0:
            raise SpeedOutOfRange(f"speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class Footstep:
    foot: str  # "left" | "right"
    x: float
    y: float
    yaw: float
    t_touchdown: float
    t_liftoff: float  # when this foothold's foot next leaves the ground

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class FootstepPlan:
    t0: float
    step_period: float
    ds_fraction: float
    initial_poses: dict[str, tuple]  # foot -> (x, y, yaw)
    steps: list[Footstep] = field(default_factory=list)
    command: WalkingCommand = WalkingCommand()

    def __post_init__(self):
        for a, b in zip(self.steps, self.steps[1:]):
            if a.foot == b.foot:
                raise ValueError("footsteps must alternate feet")

    @property
    def duration(self) -> float:
        return len(self.steps) * self.step_period

    def step_window(self, i: int) -> tuple[float, float]:
        start = self.t0 + i * self.step_period
        return start, start + self.step_period

    def poses_at_step(self, i: int) -> dict[str, tuple]:
        """Foot placements once steps 0..i-1 have landed."""
        poses = dict(self.initial_poses)
        for step in self.steps[:i]:
            poses[step.foot] = (step.x, step.y, step.yaw)
        return poses


def plan_footsteps(
    cmd: WalkingCommand,
    stance: dict[str, tuple],
    horizon: int,
    cfg: LocomotionConfig,
    t0: float = 0.0,
    first_swing: str = "right",
) -> FootstepPlan:
    """Roll the unicycle ``horizon`` steps ahead of the current stance.

    ``stance`` maps "left"/"right" to (x, y, yaw) ground poses. Zero speed
    yields an empty plan (stand) unless ``cfg.step_in_place`` is set.
    """
    if cmd.speed > cfg.max_speed + 1e-12:
        raise SpeedOutOfRange(f"speed {cmd.speed} exceeds max {cfg.max_speed}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    for foot in ("left", "right"):
        if foot not in stance:
            raise ValueError(f"stance missing {foot} foot")

    plan = FootstepPlan(t0, cfg.step_period, cfg.ds_fraction, dict(stance), command=cmd)
    if cmd.speed == 0.0 and not cfg.step_in_place:
        return plan

    # Anchor the unicycle on the stance foot (the one that just landed):
    # stripping its lateral offset recovers the vehicle pose, which keeps
    # the steady-state stride equal to speed * period across replans.
    stance_foot = "left" if first_swing == "right" else "right"
    theta = stance[stance_foot][2]
    lateral0 = np.array([-np.sin(theta), np.cos(theta)]) * (cfg.step_width / 2.0)
    offset = lateral0 if stance_foot == "left" else -lateral0
    center = np.array(stance[stance_foot][:2]) - offset
    step_len = min(cmd.speed * cfg.step_period, cfg.max_step_length)

    swing = first_swing
    steps: list[Footstep] = []
    for i in range(horizon):
        theta = theta + float(np.clip(wrap_angle(cmd.heading - theta), -cfg.max_turn_rate, cfg.max_turn_rate))
        center = center + step_len * np.array([np.cos(theta), np.sin(theta)])
        lateral = np.array([-np.sin(theta), np.cos(theta)]) * (cfg.step_width / 2.0)
        pos = center + lateral if swing == "left" else center - lateral
        start = t0 + i * cfg.step_period
        steps.append(
            Footstep(
                foot=swing,
                x=float(pos[0]),
                y=float(pos[1]),
                yaw=float(theta),
                t_touchdown=start + cfg.step_period,
                # This foothold ends when the same foot swings again, two
                # steps later, after that step's double-support phase.
                t_liftoff=start + cfg.step_period * (2.0 + cfg.ds_fraction),
            )
        )
        swing = "left" if swing == "right" else "right"

    plan.steps = steps
    _validate_bounds(plan, cfg)
    return plan


def _validate_bounds(plan: FootstepPlan, cfg: LocomotionConfig) -> None:
    poses = dict(plan.initial_poses)
    bound = np.hypot(cfg.max_step_length, cfg.step_width) + 1e-9
    for step in plan.steps:
        prev = np.array(poses[step.foot][:2])
        if np.linalg.norm(step.position - prev) > 2.0 * bound:
            raise ValueError(f"step to {step.position} exceeds reach from {prev}")
        poses[step.foot] = (step.x, step.y, step.yaw)
