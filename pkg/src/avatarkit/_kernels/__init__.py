"""Numeric kernel backend selection.

The hot inner loops (1 kHz servo ticks, min-jerk evaluation, LIPM/DCM
rollouts) live in a compiled Cython extension. A pure-Python mirror of the
same arithmetic is used when the extension is unavailable, or when
``AVATARKIT_PURE=1`` is set (useful for the backend benchmark and parity
tests). Both backends perform the identical sequence of float64 operations.
"""

import os

from . import pure as _pure

if os.environ.get("AVATARKIT_PURE") == "1":
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

minjerk_batch = _impl.minjerk_batch
servo_tick_batch = _impl.servo_tick_batch
dcm_backward = _impl.dcm_backward
lipm_com_rollout = _impl.lipm_com_rollout

# Mode codes shared by both backends and the lowlevel module.
MODE_POSITION = 0
MODE_POSITION_DIRECT = 1
MODE_VELOCITY = 2
MODE_TORQUE = 3
MODE_CURRENT = 4
MODE_PWM = 5

__all__ = [
    "BACKEND",
    "minjerk_batch",
    "servo_tick_batch",
    "dcm_backward",
    "lipm_com_rollout",
    "MODE_POSITION",
    "MODE_POSITION_DIRECT",
    "MODE_VELOCITY",
    "MODE_TORQUE",
    "MODE_CURRENT",
    "MODE_PWM",
]
