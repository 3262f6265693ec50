from .boards import BoardSet, pack_board_cmd, pack_board_state, unpack_board_cmd, unpack_board_state
from .minjerk import MinJerkRef, NonpositiveDuration, min_jerk_eval
from .servo import (
    BRUSHLESS_ONLY,
    ControlMode,
    JointServoState,
    ModeMismatch,
    PidGains,
    ServoBoard,
    UnknownJoint,
    friction_feedforward,
    servo_tick,
)

__all__ = [
    "BoardSet",
    "BRUSHLESS_ONLY",
    "ControlMode",
    "JointServoState",
    "MinJerkRef",
    "ModeMismatch",
    "NonpositiveDuration",
    "PidGains",
    "ServoBoard",
    "UnknownJoint",
    "friction_feedforward",
    "min_jerk_eval",
    "pack_board_cmd",
    "pack_board_state",
    "servo_tick",
    "unpack_board_cmd",
    "unpack_board_state",
]
