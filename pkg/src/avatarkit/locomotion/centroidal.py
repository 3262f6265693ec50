"""Simplified-model layer: LIPM/DCM centroidal reference generation.

The ZMP reference interpolates through the support centers (linear blend in
double support, constant in single support); the DCM reference is the exact
backward recursion that lands the final DCM on the final support point; the
CoM reference integrates the stable dynamics along it. At runtime the layer
converts DCM tracking error and measured-ZMP error into a commanded ZMP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._kernels import dcm_backward, lipm_com_rollout
from ..config import LocomotionConfig
from ..model.kinematics import polygon_margin, support_polygon, transform
from ..model.robot import RobotModel
from ..model.rotations import rot_z
from .footsteps import FootstepPlan


class InfeasiblePlan(RuntimeError):
    pass


def foot_pose_T(x: float, y: float, yaw: float) -> np.ndarray:
    return transform(R=rot_z(yaw), p=[x, y, 0.0])


@dataclass(frozen=True)
class SupportPhase:
    t_start: float
    t_end: float
    stance: str  # "left" | "right" | "double"
    poses: dict  # foot -> (x, y, yaw), ground placements during the phase
    swing: str | None = None  # foot in flight (single support only)
    swing_from: tuple | None = None
    swing_to: tuple | None = None

    def polygon(self, model: RobotModel) -> np.ndarray:
        # Memoized: the feasibility sweep and the 100 Hz command clamp hit
        # this for every sample of the phase.
        cached = self.__dict__.get("_polygon")
        if cached is not None:
            return cached
        if self.stance == "double":
            poses_T = {f: foot_pose_T(*p) for f, p in self.poses.items()}
        else:
            poses_T = {self.stance: foot_pose_T(*self.poses[self.stance])}
        polygon = support_polygon(model, self.stance, poses_T)
        object.__setattr__(self, "_polygon", polygon)
        return polygon


@dataclass
class CentroidalRefs:
    t0: float
    dt: float
    omega: float
    com_height: float
    zmp: np.ndarray  # (N, 2)
    dcm: np.ndarray  # (N+1, 2)
    com: np.ndarray  # (N+1, 2)
    com_vel: np.ndarray  # (N+1, 2)
    phases: list[SupportPhase]

    @property
    def t_end(self) -> float:
        return self.t0 + self.zmp.shape[0] * self.dt

    def _index(self, t: float, n: int) -> int:
        k = int(math.floor((t - self.t0) / self.dt + 1e-9))
        return min(max(k, 0), n - 1)

    def sample(self, t: float) -> dict:
        kz = self._index(t, self.zmp.shape[0])
        k = self._index(t, self.dcm.shape[0])
        return {
            "zmp_ref": self.zmp[kz],
            "dcm_ref": self.dcm[k],
            "com_ref": self.com[k],
            "com_vel_ref": self.com_vel[k],
        }

    def phase_at(self, t: float) -> SupportPhase:
        for phase in self.phases:
            if phase.t_start - 1e-9 <= t < phase.t_end - 1e-9:
                return phase
        return self.phases[-1]


def _support_center(poses: dict, foot: str) -> np.ndarray:
    return np.array(poses[foot][:2])


def _double_center(poses: dict) -> np.ndarray:
    return (np.array(poses["left"][:2]) + np.array(poses["right"][:2])) / 2.0


def _build_phases_and_zmp(plan: FootstepPlan, cfg: LocomotionConfig, tail_s: float):
    dt = 1.0 / cfg.rate_hz
    T = cfg.step_period
    ds = cfg.ds_fraction * T
    phases: list[SupportPhase] = []
    knots: list[tuple[float, np.ndarray]] = []  # (time, zmp anchor)

    if not plan.steps:
        center = _double_center(plan.initial_poses)
        t_end = plan.t0 + tail_s
        phases.append(SupportPhase(plan.t0, t_end, "double", dict(plan.initial_poses)))
        knots = [(plan.t0, center), (t_end, center)]
        return phases, knots, dt, t_end

    prev_anchor = _double_center(plan.initial_poses)
    knots.append((plan.t0, prev_anchor))
    for i, step in enumerate(plan.steps):
        start, end = plan.step_window(i)
        poses = plan.poses_at_step(i)
        stance_foot = "left" if step.foot == "right" else "right"
        anchor = _support_center(poses, stance_foot)
        # Double support: blend the ZMP to the stance foot, swing foot still down.
        phases.append(SupportPhase(start, start + ds, "double", poses))
        knots.append((start + ds, anchor))
        # Single support: swing foot travels to its new foothold.
        phases.append(
            SupportPhase(
                start + ds,
                end,
                stance_foot,
                poses,
                swing=step.foot,
                swing_from=poses[step.foot],
                swing_to=(step.x, step.y, step.yaw),
            )
        )
        knots.append((end, anchor))
        prev_anchor = anchor

    final_poses = plan.poses_at_step(len(plan.steps))
    final_center = _double_center(final_poses)
    t_last = plan.t0 + plan.duration
    phases.append(SupportPhase(t_last, t_last + ds, "double", final_poses))
    knots.append((t_last + ds, final_center))
    t_end = t_last + ds + tail_s
    phases.append(SupportPhase(t_last + ds, t_end, "double", final_poses))
    knots.append((t_end, final_center))
    return phases, knots, dt, t_end


def _sample_knots(knots, t0, dt, n):
    """Piecewise-linear ZMP through the (time, anchor) knots."""
    times = np.array([k[0] for k in knots])
    anchors = np.array([k[1] for k in knots])
    t = t0 + dt * np.arange(n)
    j = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(knots) - 2)
    ta = times[j]
    tb = times[j + 1]
    span = np.maximum(tb - ta, 1e-300)
    lam = np.where(tb > ta, np.clip((t - ta) / span, 0.0, 1.0), 0.0)
    return (1.0 - lam)[:, None] * anchors[j] + lam[:, None] * anchors[j + 1]


def generate_centroidal(
    plan: FootstepPlan,
    com_state: tuple[np.ndarray, np.ndarray],
    cfg: LocomotionConfig,
    model: RobotModel,
    zmp_meas: np.ndarray | None = None,
    tail_s: float = 2.0,
) -> CentroidalRefs:
    """Feasible centroidal references for a footstep plan.

    ``com_state`` is the (position, velocity) of the point-mass CoM on the
    ground plane at plan start; the reference CoM departs from it so the
    trajectory is continuous. Raises InfeasiblePlan when the ZMP reference
    leaves the active support polygon by more than the configured tolerance.
    """
    com_pos, _ = com_state
    if not (np.all(np.isfinite(com_pos))):
        raise ValueError("CoM state must be finite")
    omega = math.sqrt(cfg.gravity / cfg.com_height)
    phases, knots, dt, t_end = _build_phases_and_zmp(plan, cfg, tail_s)
    n = max(2, int(round((t_end - plan.t0) / dt)))
    zmp = _sample_knots(knots, plan.t0, dt, n)

    refs = CentroidalRefs(
        t0=plan.t0,
        dt=dt,
        omega=omega,
        com_height=cfg.com_height,
        zmp=zmp,
        dcm=np.zeros((n + 1, 2)),
        com=np.zeros((n + 1, 2)),
        com_vel=np.zeros((n + 1, 2)),
        phases=phases,
    )
    check_zmp_feasibility(refs, model, cfg)

    a = math.exp(omega * dt)
    b = math.exp(-omega * dt)
    s = math.sinh(omega * dt)
    for axis in range(2):
        dcm_backward(zmp[:, axis].copy(), float(zmp[-1, axis]), a, refs.dcm[:, axis])
        lipm_com_rollout(
            refs.dcm[:, axis].copy(),
            zmp[:, axis].copy(),
            float(com_pos[axis]),
            b,
            s,
            omega,
            refs.com[:, axis],
            refs.com_vel[:, axis],
        )
    # Optional one-shot measured-ZMP correction at generation time.
    if zmp_meas is not None:
        refs.zmp[0] = refs.zmp[0] + cfg.k_zmp * (refs.zmp[0] - zmp_meas)
    return refs


def check_zmp_feasibility(refs: CentroidalRefs, model: RobotModel, cfg: LocomotionConfig) -> None:
    """Every ZMP sample must stay within its phase's support polygon (up to
    the configured tolerance). The built-in reference scheme satisfies this
    by construction (anchors are support centers, blends connect points of
    one convex hull); the guard protects hand-built or doctored references.
    """
    times = refs.t0 + refs.dt * np.arange(refs.zmp.shape[0])
    start = 0
    for phase in refs.phases:
        stop = int(np.searchsorted(times, phase.t_end - 1e-9))
        if stop <= start:
            continue
        polygon = phase.polygon(model)
        points = refs.zmp[start:stop]
        # Vectorized margins: signed distance to every CCW edge at once.
        a = polygon
        b = np.roll(polygon, -1, axis=0)
        edges = b - a
        lengths = np.linalg.norm(edges, axis=1)
        rel = points[:, None, :] - a[None, :, :]
        cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
        margins = (cross / lengths[None, :]).min(axis=1)
        if np.any(margins < -cfg.zmp_margin_tol):
            k = start + int(np.argmin(margins))
            raise InfeasiblePlan(
                f"ZMP reference {refs.zmp[k]} exits support polygon at t={times[k]:.3f}"
            )
        start = stop


def commanded_zmp(
    refs: CentroidalRefs,
    t: float,
    dcm_meas: np.ndarray,
    zmp_meas: np.ndarray | None,
    cfg: LocomotionConfig,
    model: RobotModel,
) -> np.ndarray:
    """100 Hz commanded ZMP: reference plus DCM tracking feedback plus the
    proportional measured-ZMP term, saturated into the support polygon."""
    sample = refs.sample(t)
    p = sample["zmp_ref"].copy()
    p = p + (1.0 + cfg.k_dcm / refs.omega) * (dcm_meas - sample["dcm_ref"])
    if zmp_meas is not None:
        p = p + cfg.k_zmp * (sample["zmp_ref"] - zmp_meas)
    polygon = refs.phase_at(t).polygon(model)
    return clamp_into_polygon(polygon, p, cfg.zmp_margin_tol)


def clamp_into_polygon(polygon: np.ndarray, point: np.ndarray, margin: float) -> np.ndarray:
    """Pull a point toward the polygon centroid until it clears ``margin``."""
    if polygon_margin(polygon, point) >= margin:
        return point
    centroid = polygon.mean(axis=0)
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = (lo + hi) / 2.0
        candidate = point + mid * (centroid - point)
        if polygon_margin(polygon, candidate) >= margin:
            hi = mid
        else:
            lo = mid
    return point + hi * (centroid - point)
