from .arms import ArmIkResult, NULL_SPACE_JOINTS, retarget_arm_orientations
from .frames import (
    EXPRESSIONS,
    NODE_NAMES,
    Calibration,
    OperatorFrame,
    OperatorMoving,
    UnknownExpression,
    calibrate,
    neutral_frame,
)
from .mapping import (
    FACE_PATTERNS,
    LocomotionFilter,
    RetargetedRefs,
    Retargeter,
    retarget_face,
    retarget_fingers,
    retarget_head,
    retarget_torso,
)
from .session import frame_to_line, line_to_frame, record_session, replay_session

__all__ = [
    "ArmIkResult",
    "Calibration",
    "EXPRESSIONS",
    "FACE_PATTERNS",
    "LocomotionFilter",
    "NODE_NAMES",
    "NULL_SPACE_JOINTS",
    "OperatorFrame",
    "OperatorMoving",
    "RetargetedRefs",
    "Retargeter",
    "UnknownExpression",
    "calibrate",
    "frame_to_line",
    "line_to_frame",
    "neutral_frame",
    "record_session",
    "replay_session",
    "retarget_arm_orientations",
    "retarget_face",
    "retarget_fingers",
    "retarget_head",
    "retarget_torso",
]
