from .centroidal import (
    CentroidalRefs,
    check_zmp_feasibility,
    InfeasiblePlan,
    SupportPhase,
    clamp_into_polygon,
    commanded_zmp,
    foot_pose_T,
    generate_centroidal,
)
from .footsteps import Footstep, FootstepPlan, SpeedOutOfRange, WalkingCommand, plan_footsteps
from .pipeline import ControlPipeline, FaultEvent, PipelineOutput
from .qp import QpInfeasible, QpProblem, QpSolution, enumerate_qp_oracle, solve_qp
from .whole_body import (
    TaskStack,
    WholeBodyResult,
    active_joint_indices,
    assemble_whole_body_qp,
    com_and_jacobian,
    frame_jacobian,
    solve_whole_body_qp,
)
from .zmp import NoGroundContact, measured_zmp

__all__ = [
    "CentroidalRefs",
    "ControlPipeline",
    "FaultEvent",
    "Footstep",
    "FootstepPlan",
    "InfeasiblePlan",
    "NoGroundContact",
    "PipelineOutput",
    "QpInfeasible",
    "QpProblem",
    "QpSolution",
    "SpeedOutOfRange",
    "SupportPhase",
    "TaskStack",
    "WalkingCommand",
    "WholeBodyResult",
    "active_joint_indices",
    "assemble_whole_body_qp",
    "check_zmp_feasibility",
    "clamp_into_polygon",
    "com_and_jacobian",
    "commanded_zmp",
    "enumerate_qp_oracle",
    "foot_pose_T",
    "frame_jacobian",
    "generate_centroidal",
    "measured_zmp",
    "plan_footsteps",
    "solve_qp",
    "solve_whole_body_qp",
]
