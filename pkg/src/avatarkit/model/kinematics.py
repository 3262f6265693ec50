"""Canonical kinematic parameterization and forward kinematics.

The platform spec gives segment lengths but not axis placement, so this
table is the single source of truth: z-up, x-forward, arms hanging along -z
at the zero posture, ball joints modeled as coincident revolute triples.
Chain-local FK roots at the chain mount (shoulder, hip, neck base); the
whole-body helper composes the torso and mounts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .robot import LimitViolation, RobotModel
from .rotations import axis_vector, rot_axis


class NoContact(ValueError):
    pass


def transform(R=None, p=None) -> np.ndarray:
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if p is not None:
        T[:3, 3] = p
    return T


@dataclass(frozen=True)
class Step:
    kind: str  # "joint" | "translate" | "link"
    name: str = ""
    axis: str = ""
    offset: tuple = (0.0, 0.0, 0.0)


def _joint(name, axis):
    return Step("joint", name=name, axis=axis)


def _translate(x, y, z):
    return Step("translate", offset=(x, y, z))


def _link(label):
    return Step("link", name=label)


ARM_SEGMENTS = (0.24, 0.20, 0.12)  # upper arm, forearm, hand; sums to 0.56
LEG_SEGMENTS = (0.33, 0.25, 0.05)  # thigh, shank, ankle-to-sole; sums to 0.63
NECK_SEGMENTS = (0.10, 0.15)  # chest-to-head-base, head offset
TORSO_RISE = 0.37
SHOULDER_Y = 0.17
HIP_Y = 0.10
CAMERA_FORWARD = 0.05


def _arm_chain(side: str):
    g = f"{side}_arm"
    return (
        _joint(f"{g}.shoulder_pitch", "y"),
        _joint(f"{g}.shoulder_roll", "x"),
        _joint(f"{g}.shoulder_yaw", "z"),
        _link("upper_arm"),
        _translate(0, 0, -ARM_SEGMENTS[0]),
        _joint(f"{g}.elbow", "y"),
        _link("forearm"),
        _translate(0, 0, -ARM_SEGMENTS[1]),
        _joint(f"{g}.wrist_yaw", "z"),
        _joint(f"{g}.wrist_pitch", "y"),
        _joint(f"{g}.wrist_roll", "x"),
        _link("hand"),
        _translate(0, 0, -ARM_SEGMENTS[2]),
        _link("fingertip"),
    )


def _leg_chain(side: str):
    g = f"{side}_leg"
    return (
        _joint(f"{g}.hip_pitch", "y"),
        _joint(f"{g}.hip_roll", "x"),
        _joint(f"{g}.hip_yaw", "z"),
        _link("thigh"),
        _translate(0, 0, -LEG_SEGMENTS[0]),
        _joint(f"{g}.knee", "y"),
        _link("shank"),
        _translate(0, 0, -LEG_SEGMENTS[1]),
        _joint(f"{g}.ankle_pitch", "y"),
        _joint(f"{g}.ankle_roll", "x"),
        _link("foot"),
        _translate(0, 0, -LEG_SEGMENTS[2]),
        _link("sole"),
    )


CHAINS: dict[str, tuple] = {
    "left_arm": _arm_chain("left"),
    "right_arm": _arm_chain("right"),
    "left_leg": _leg_chain("left"),
    "right_leg": _leg_chain("right"),
    "neck_head": (
        _joint("neck.neck_pitch", "y"),
        _joint("neck.neck_roll", "x"),
        _joint("neck.neck_yaw", "z"),
        _link("neck"),
        _translate(0, 0, NECK_SEGMENTS[0]),
        _link("head_base"),
        _translate(0, 0, NECK_SEGMENTS[1]),
        _link("head"),
        _joint("head.eyes_tilt", "y"),
        _joint("head.eyes_version", "z"),
        _link("gaze"),
        _translate(CAMERA_FORWARD, 0, 0),
        _link("camera"),
    ),
    "torso": (
        _joint("torso.torso_yaw", "z"),
        _joint("torso.torso_roll", "x"),
        _joint("torso.torso_pitch", "y"),
        _link("torso"),
        _translate(0, 0, TORSO_RISE),
        _link("chest"),
    ),
}

# Mount transform of each chain in its parent frame ("pelvis" or "chest").
MOUNTS = {
    "left_arm": ("chest", transform(p=[0.0, SHOULDER_Y, 0.0])),
    "right_arm": ("chest", transform(p=[0.0, -SHOULDER_Y, 0.0])),
    "left_leg": ("pelvis", transform(p=[0.0, HIP_Y, 0.0])),
    "right_leg": ("pelvis", transform(p=[0.0, -HIP_Y, 0.0])),
    "neck_head": ("chest", np.eye(4)),
    "torso": ("pelvis", np.eye(4)),
}


def chain_span(chain: str) -> float:
    """Sum of link lengths; FK tip distance can never exceed it."""
    return sum(np.linalg.norm(step.offset) for step in CHAINS[chain] if step.kind == "translate")


def chain_joint_indices(model: RobotModel, chain: str) -> list[int]:
    return [model.index_of(s.name) for s in CHAINS[chain] if s.kind == "joint"]


def chain_fk(
    model: RobotModel,
    chain: str,
    q: np.ndarray,
    base: np.ndarray | None = None,
    validate: bool = True,
) -> dict[str, np.ndarray]:
    """Poses of the chain's link frames, rooted at ``base`` (default mount
    identity). ``q`` is the full 54-vector; raises LimitViolation when asked
    to validate an out-of-limit configuration."""
    if chain not in CHAINS:
        raise KeyError(f"unknown chain {chain!r}")
    q = np.asarray(q, dtype=float)
    if validate:
        model.validate(q)
    T = np.eye(4) if base is None else base.copy()
    out: dict[str, np.ndarray] = {}
    for step in CHAINS[chain]:
        if step.kind == "joint":
            T = T @ transform(R=rot_axis(step.axis, q[model.index_of(step.name)]))
        elif step.kind == "translate":
            T = T @ transform(p=step.offset)
        else:
            out[step.name] = T.copy()
    return out


def chain_jacobian(
    model: RobotModel,
    chain: str,
    q: np.ndarray,
    link: str,
    base: np.ndarray | None = None,
) -> tuple[np.ndarray, list[int]]:
    """Geometric Jacobian of ``link`` w.r.t. the chain's joints.

    Rows are [linear; angular] expressed in the root frame; columns follow
    the chain's joint order (returned as model indices).
    """
    q = np.asarray(q, dtype=float)
    T = np.eye(4) if base is None else base.copy()
    joint_world: list[tuple[int, np.ndarray, np.ndarray]] = []  # (idx, axis_w, origin_w)
    p_link = None
    for step in CHAINS[chain]:
        if step.kind == "joint":
            idx = model.index_of(step.name)
            axis_w = T[:3, :3] @ axis_vector(step.axis)
            joint_world.append((idx, axis_w, T[:3, 3].copy()))
            T = T @ transform(R=rot_axis(step.axis, q[idx]))
        elif step.kind == "translate":
            T = T @ transform(p=step.offset)
        elif step.name == link:
            p_link = T[:3, 3].copy()
            break
    if p_link is None:
        raise KeyError(f"link {link!r} not on chain {chain!r}")
    J = np.zeros((6, len(joint_world)))
    indices = []
    for col, (idx, axis_w, origin_w) in enumerate(joint_world):
        J[:3, col] = np.cross(axis_w, p_link - origin_w)
        J[3:, col] = axis_w
        indices.append(idx)
    return J, indices


def fk_world(model: RobotModel, q: np.ndarray, base: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Whole-body FK: every chain's links keyed as ``chain/link``, plus
    ``pelvis`` and ``chest``."""
    pelvis = np.eye(4) if base is None else np.asarray(base, dtype=float)
    frames: dict[str, np.ndarray] = {"pelvis": pelvis.copy()}
    torso = chain_fk(model, "torso", q, base=pelvis, validate=False)
    frames["chest"] = torso["chest"]
    frames["torso/torso"] = torso["torso"]
    for chain, (parent, mount) in MOUNTS.items():
        if chain == "torso":
            continue
        root = (pelvis if parent == "pelvis" else frames["chest"]) @ mount
        for link, pose in chain_fk(model, chain, q, base=root, validate=False).items():
            frames[f"{chain}/{link}"] = pose
    return frames


# Point masses sit at segment midpoints; group mass splits uniformly across
# the group's links (only group fractions are specified).
_COM_POINTS = (
    # (frame producing the segment start, offset to midpoint, mass share key)
    ("left_leg/thigh", (0, 0, -LEG_SEGMENTS[0] / 2), "legs", 1 / 6),
    ("left_leg/shank", (0, 0, -LEG_SEGMENTS[1] / 2), "legs", 1 / 6),
    ("left_leg/foot", (0, 0, -LEG_SEGMENTS[2] / 2), "legs", 1 / 6),
    ("right_leg/thigh", (0, 0, -LEG_SEGMENTS[0] / 2), "legs", 1 / 6),
    ("right_leg/shank", (0, 0, -LEG_SEGMENTS[1] / 2), "legs", 1 / 6),
    ("right_leg/foot", (0, 0, -LEG_SEGMENTS[2] / 2), "legs", 1 / 6),
    ("left_arm/upper_arm", (0, 0, -ARM_SEGMENTS[0] / 2), "arms", 1 / 6),
    ("left_arm/forearm", (0, 0, -ARM_SEGMENTS[1] / 2), "arms", 1 / 6),
    ("left_arm/hand", (0, 0, -ARM_SEGMENTS[2] / 2), "arms", 1 / 6),
    ("right_arm/upper_arm", (0, 0, -ARM_SEGMENTS[0] / 2), "arms", 1 / 6),
    ("right_arm/forearm", (0, 0, -ARM_SEGMENTS[1] / 2), "arms", 1 / 6),
    ("right_arm/hand", (0, 0, -ARM_SEGMENTS[2] / 2), "arms", 1 / 6),
    ("pelvis", (0, 0, TORSO_RISE / 2), "torso_and_head", 1 / 3),
    ("chest", (0, 0, NECK_SEGMENTS[0] / 2), "torso_and_head", 1 / 3),
    ("neck_head/head", (0, 0, 0), "torso_and_head", 1 / 3),
)


def com_position(model: RobotModel, q: np.ndarray, base: np.ndarray | None = None) -> np.ndarray:
    frames = fk_world(model, q, base)
    total = 0.0
    acc = np.zeros(3)
    for frame, offset, segment, share in _COM_POINTS:
        m = model.mass.segment_mass(segment) * share
        T = frames[frame]
        acc += m * (T[:3, :3] @ np.asarray(offset) + T[:3, 3])
        total += m
    return acc / total


def foot_section_rectangles(model: RobotModel) -> dict[str, np.ndarray]:
    """Corner points (sole frame, z=0) of the rear and front foot sections."""
    g = model.geometry
    half_w = g.foot_width_m / 2.0
    x_min = -g.foot_length_m / 2.0
    x_split = x_min + g.foot_rear_section_m
    x_max = g.foot_length_m / 2.0
    rear = np.array([[x_min, -half_w], [x_split, -half_w], [x_split, half_w], [x_min, half_w]])
    front = np.array([[x_split, -half_w], [x_max, -half_w], [x_max, half_w], [x_split, half_w]])
    return {"rear": rear, "front": front}


def ft_sensor_positions(model: RobotModel) -> dict[str, np.ndarray]:
    """Foot F/T sensor origins in the sole frame (one per section center)."""
    rects = foot_section_rectangles(model)
    return {name: rect.mean(axis=0) for name, rect in rects.items()}


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns CCW hull vertices."""
    pts = sorted(set(map(tuple, np.round(points, 12))))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_margin(polygon: np.ndarray, point) -> float:
    """Signed distance of a ground point to a CCW convex polygon boundary
    (positive inside)."""
    p = np.asarray(point, dtype=float)
    margins = []
    n = len(polygon)
    for i in range(n):
        a = polygon[i]
        b = polygon[(i + 1) % n]
        edge = b - a
        length = np.linalg.norm(edge)
        if length < 1e-12:
            continue
        margins.append((edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])) / length)
    return float(min(margins))


def support_polygon(model: RobotModel, stance: str, foot_poses: dict[str, np.ndarray]) -> np.ndarray:
    """Convex hull, on the ground plane, of the contacting sections' corners.

    ``foot_poses`` maps "left"/"right" to sole poses; a foot counts as
    contacting when its sole is flat and at ground height.
    """
    feet = {"left": ["left"], "right": ["right"], "double": ["left", "right"]}.get(stance)
    if feet is None:
        raise ValueError(f"stance must be left/right/double, got {stance!r}")
    rects = foot_section_rectangles(model)
    corners = []
    for foot in feet:
        pose = foot_poses.get(foot)
        if pose is None:
            continue
        if abs(pose[2, 3]) > 1e-3 or pose[2, 2] < 0.999:
            continue  # airborne or tilted: not contacting
        R2 = pose[:2, :2]
        p2 = pose[:2, 3]
        for rect in rects.values():
            corners.extend((R2 @ c + p2) for c in rect)
    if not corners:
        raise NoContact(f"no contacting foot for stance {stance!r}")
    return convex_hull(np.array(corners))


def forward_kinematics(model: RobotModel, chain: str, q: np.ndarray) -> dict[str, np.ndarray]:
    """Spec-facing chain FK (validates limits, chain-local root)."""
    return chain_fk(model, chain, q, validate=True)


__all__ = [
    "ARM_SEGMENTS",
    "CHAINS",
    "LEG_SEGMENTS",
    "MOUNTS",
    "LimitViolation",
    "NoContact",
    "chain_fk",
    "chain_jacobian",
    "chain_joint_indices",
    "chain_span",
    "com_position",
    "convex_hull",
    "foot_section_rectangles",
    "forward_kinematics",
    "fk_world",
    "ft_sensor_positions",
    "polygon_margin",
    "support_polygon",
    "transform",
]
