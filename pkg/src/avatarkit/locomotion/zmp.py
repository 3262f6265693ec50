"""Measured ZMP composition from the four foot wrench sensors."""

from __future__ import annotations

import numpy as np


class NoGroundContact(RuntimeError):
    pass


FZ_THRESHOLD_N = 50.0


def measured_zmp(
    wrenches: dict[str, np.ndarray],
    sensor_poses: dict[str, np.ndarray],
    fz_threshold: float = FZ_THRESHOLD_N,
) -> np.ndarray:
    """Ground-plane ZMP from per-sensor six-axis wrenches.

    Each sensor contributes its ground projection shifted by the local
    moment arm (-tau_y/fz, +tau_x/fz); contributions combine weighted by
    vertical force. Wrenches are (fx, fy, fz, tau_x, tau_y, tau_z) in the
    sensor frame, poses map sensor frames to world.
    """
    total_fz = 0.0
    acc = np.zeros(2)
    for name, wrench in wrenches.items():
        fz = float(wrench[2])
        if fz <= 0.0:
            continue
        pose = sensor_poses[name]
        local = np.array([-wrench[4] / fz, wrench[3] / fz, 0.0])
        point = pose[:3, :3] @ local + pose[:3, 3]
        acc += fz * point[:2]
        total_fz += fz
    if total_fz <= fz_threshold:
        raise NoGroundContact(f"total vertical force {total_fz:.1f} N below threshold")
    return acc / total_fz
