from .frames import (
    FRAME_RESOLUTION,
    FRAME_TAG,
    FrameDescriptor,
    FramePacer,
    LatestFrameCell,
    SceneObject,
    pack_frame,
    unpack_frame,
)
from .routing import (
    DEFAULT_HAPTIC_MAPPING,
    GLOVE_TAG,
    HAPTIC_TAG,
    SKIN_TAG,
    FingerFeedback,
    HapticCommand,
    SkinEvent,
    UnknownPatch,
    UnmappedPatch,
    compute_finger_feedback,
    latency_readout,
    pack_haptic,
    pack_skin_event,
    route_skin_to_haptics,
    unpack_haptic,
    unpack_skin_event,
)

__all__ = [
    "DEFAULT_HAPTIC_MAPPING",
    "FRAME_RESOLUTION",
    "FRAME_TAG",
    "FingerFeedback",
    "FrameDescriptor",
    "FramePacer",
    "GLOVE_TAG",
    "HAPTIC_TAG",
    "HapticCommand",
    "LatestFrameCell",
    "SKIN_TAG",
    "SceneObject",
    "SkinEvent",
    "UnknownPatch",
    "UnmappedPatch",
    "compute_finger_feedback",
    "latency_readout",
    "pack_frame",
    "pack_haptic",
    "pack_skin_event",
    "route_skin_to_haptics",
    "unpack_frame",
    "unpack_haptic",
    "unpack_skin_event",
]
