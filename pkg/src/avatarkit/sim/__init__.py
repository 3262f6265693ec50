from . import wire
from .presets import ARM_POSE_PRESETS, preset_posture
from .scenario import (
    ScenarioAbort,
    ScenarioEvent,
    ScenarioReport,
    ScenarioRunner,
    load_scenario,
    parse_scenario,
    run_scenario,
)
from .stack import AvatarStack, LiveRunner, standing_posture
from .world import Divergence, UnknownPatch, World, WorldState

__all__ = [
    "ARM_POSE_PRESETS",
    "AvatarStack",
    "Divergence",
    "LiveRunner",
    "ScenarioAbort",
    "ScenarioEvent",
    "ScenarioReport",
    "ScenarioRunner",
    "UnknownPatch",
    "World",
    "WorldState",
    "load_scenario",
    "parse_scenario",
    "preset_posture",
    "run_scenario",
    "standing_posture",
    "wire",
]
