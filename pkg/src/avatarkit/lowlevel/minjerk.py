"""Minimum-jerk reference profiles (rest-to-rest quintic).

The normalized profile s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 is the
closed-form jerk minimizer for zero boundary velocity and acceleration;
beyond the duration the profile holds the final value with zero derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._kernels import minjerk_batch


class NonpositiveDuration(ValueError):
    pass


@dataclass(frozen=True)
class MinJerkRef:
    q0: float
    qf: float
    T: float
    t0: float = 0.0

    def __post_init__(self):
        if self.T <= 0:
            raise NonpositiveDuration(f"duration must be > 0, got {self.T}")


def min_jerk_eval(ref: MinJerkRef, t) -> tuple:
    """Position, velocity, acceleration at time(s) ``t`` (t >= t0)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < ref.t0):
        raise ValueError("evaluation before profile start")
    n = t_arr.shape[0]
    ones = np.ones(n)
    pos = np.empty(n)
    vel = np.empty(n)
    acc = np.empty(n)
    minjerk_batch(
        ref.q0 * ones, ref.qf * ones, ref.T * ones, ref.t0 * ones, t_arr, pos, vel, acc
    )
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(pos[0]), float(vel[0]), float(acc[0])
    return pos, vel, acc
