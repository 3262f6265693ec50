from . import kinematics, rotations
from .kinematics import (
    NoContact,
    chain_fk,
    chain_jacobian,
    com_position,
    convex_hull,
    fk_world,
    forward_kinematics,
    polygon_margin,
    support_polygon,
)
from .robot import (
    GROUPS,
    MOTOR_SPECS,
    SKIN_PATCHES,
    TOTAL_DOF,
    Geometry,
    LimitViolation,
    MassModel,
    MotorClass,
    MotorSpec,
    RobotModel,
    SensorLayout,
    UnknownJoint,
    build_icub3_model,
    export_model_text,
    load_model_text,
)

__all__ = [
    "GROUPS",
    "Geometry",
    "LimitViolation",
    "MassModel",
    "MotorClass",
    "MotorSpec",
    "MOTOR_SPECS",
    "NoContact",
    "RobotModel",
    "SKIN_PATCHES",
    "SensorLayout",
    "TOTAL_DOF",
    "UnknownJoint",
    "build_icub3_model",
    "chain_fk",
    "chain_jacobian",
    "com_position",
    "convex_hull",
    "export_model_text",
    "fk_world",
    "forward_kinematics",
    "kinematics",
    "load_model_text",
    "polygon_margin",
    "rotations",
    "support_polygon",
]
