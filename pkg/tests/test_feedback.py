"""Feedback routing: haptics, glove, frame pacing, latency display."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avatarkit.bus import LatencyStats
from avatarkit.feedback import (
    FrameDescriptor,
    FramePacer,
    HapticCommand,
    SkinEvent,
    UnknownPatch,
    UnmappedPatch,
    compute_finger_feedback,
    latency_readout,
    pack_frame,
    pack_haptic,
    pack_skin_event,
    route_skin_to_haptics,
    unpack_frame,
    unpack_haptic,
    unpack_skin_event,
)


# -- skin -> haptics ---------------------------------------------------------------


def test_silent_event_routes_nowhere():
    event = SkinEvent("left_upper_arm", frozenset(), 0.0, 1.0)
    assert route_skin_to_haptics(event) is None


def test_touch_routes_to_matching_node():
    event = SkinEvent("left_upper_arm", frozenset({1, 2}), 0.8, 1.0)
    cmd = route_skin_to_haptics(event)
    assert cmd.node == "operator_left_arm"
    assert cmd.amplitude == 0.8
    assert cmd.duration_ms >= 50.0


def test_unmapped_patch_raises():
    event = SkinEvent("right_hand", frozenset({0}), 0.5, 0.0)
    with pytest.raises(UnmappedPatch):
        route_skin_to_haptics(event, mapping={"left_upper_arm": "x"})


def test_unknown_patch_rejected_at_event():
    with pytest.raises(UnknownPatch):
        SkinEvent("torso", frozenset({1}), 0.5, 0.0)


def test_intensity_taxel_consistency():
    with pytest.raises(ValueError):
        SkinEvent("left_hand", frozenset(), 0.5, 0.0)  # intensity without taxels
    with pytest.raises(ValueError):
        SkinEvent("left_hand", frozenset({1}), 0.0, 0.0)  # taxels without intensity


@given(st.floats(0.001, 1.0))
@settings(max_examples=60, deadline=None)
def test_amplitude_monotone_in_intensity(intensity):
    lower = route_skin_to_haptics(SkinEvent("left_hand", frozenset({0}), intensity / 2, 0.0))
    higher = route_skin_to_haptics(SkinEvent("left_hand", frozenset({0}), intensity, 0.0))
    assert higher.amplitude >= lower.amplitude


def test_haptic_duration_floor():
    with pytest.raises(ValueError):
        HapticCommand("operator_left_arm", 0.5, duration_ms=20.0)


def test_skin_and_haptic_payload_roundtrip():
    event = SkinEvent("right_upper_arm", frozenset({3, 9, 17}), 0.62, 4.5)
    assert unpack_skin_event(pack_skin_event(event)) == event
    cmd = HapticCommand("operator_right_arm", 0.62, 80.0)
    assert unpack_haptic(pack_haptic(cmd)) == cmd


# -- glove -------------------------------------------------------------------------


def test_finger_feedback_rest():
    fb = compute_finger_feedback(np.zeros(5))
    assert np.all(fb.brake_force_n == 0.0)
    assert np.all(fb.vibration == 0.0)


def test_finger_feedback_clips_at_20n():
    fb = compute_finger_feedback([50.0, 0, 0, 0, 0])
    assert fb.brake_force_n[0] == 20.0


def test_finger_feedback_formula():
    fb = compute_finger_feedback([10.0])
    assert fb.brake_force_n[0] == 10.0
    assert fb.vibration[0] == 1.0  # saturated at 5 N full scale


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=5))
@settings(max_examples=200, deadline=None)
def test_brake_never_exceeds_20n(forces):
    fb = compute_finger_feedback(forces)
    assert np.all(fb.brake_force_n <= 20.0)
    assert np.all(fb.vibration <= 1.0)


def test_negative_force_rejected():
    with pytest.raises(ValueError):
        compute_finger_feedback([-1.0])


# -- frame pacing ------------------------------------------------------------------


def test_60fps_source_decimates_to_15fps():
    pacer = FramePacer(15.0)
    delivered = 0
    for k in range(600):  # 10 s at 60 fps
        if pacer.offer(object(), now=k / 60.0) is not None:
            delivered += 1
    assert abs(delivered - 150) <= 2


def test_slow_source_passes_through():
    pacer = FramePacer(15.0)
    delivered = sum(1 for k in range(50) if pacer.offer(object(), now=k / 5.0) is not None)
    assert delivered == 50  # 5 fps: no upsampling, nothing dropped


def test_burst_delivers_exactly_one():
    pacer = FramePacer(15.0)
    delivered = sum(
        1 for k in range(10) if pacer.offer(object(), now=1e-4 * k) is not None
    )
    assert delivered == 1  # newest-wins within one interval


def test_frame_descriptor_roundtrip():
    frame = FrameDescriptor(
        timestamp=2.5,
        camera_position=(0.1, 0.2, 1.4),
        camera_orientation=(1.0, 0.0, 0.0, 0.0),
        objects=(),
    )
    back = unpack_frame(pack_frame(frame))
    assert back.resolution == (1024, 768)
    assert back.timestamp == 2.5
    assert np.allclose(back.camera_position, frame.camera_position, atol=1e-6)


# -- latency display ------------------------------------------------------------------


def test_latency_alarm_threshold():
    ok = latency_readout(LatencyStats(100, 10.0, 12.0, 14.0, 10.0))
    assert ok["alarm"] is False
    bad = latency_readout(LatencyStats(100, 20.0, 30.0, 40.0, 10.0))
    assert bad["alarm"] is True


def test_latency_no_data():
    assert latency_readout(None) == {"status": "no data"}
