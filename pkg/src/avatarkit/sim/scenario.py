"""Scenario scripting: timed events against a live stack, with built-in
checkpoints per event and a machine-checkable report.

File format: one event per line, ``<t> <kind> <args...>``; comments start
with ``#``. Events must be time-ordered. Kinds:

    walk <heading> <speed>
    face <label>
    arm_pose <preset>
    fingers <open|close> <left|right|both>
    head <yaw> <pitch>
    eyelids <openness>
    touch <patch> <intensity>
    link <delay_ms> <jitter_ms> <loss>
    blackout <topic> <loss>
    spawn_object <id> [rel] <x> <y> <z>
    replay <session-file>
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bus import LinkProfile
from ..retargeting import FACE_PATTERNS
from ..retargeting.session import replay_session
from . import wire
from .presets import preset_posture
from .stack import AvatarStack, standing_posture
from .world import Divergence


class ScenarioAbort(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioEvent:
    t: float
    kind: str
    args: tuple


@dataclass
class Checkpoint:
    event: ScenarioEvent
    deadline: float
    check: object  # callable(stack) -> bool
    detail: str
    passed: bool = False
    resolved_at: float | None = None


@dataclass
class ScenarioReport:
    events: list = field(default_factory=list)  # (event, outcome str, detail)
    fault_events: list = field(default_factory=list)
    min_zmp_margin: float = math.inf
    latency_stats: object = None
    relay_envelopes: int = 0
    duration_s: float = 0.0
    wall_s: float = 0.0
    aborted: str | None = None

    @property
    def all_passed(self) -> bool:
        return self.aborted is None and all(o == "pass" for _, o, _ in self.events)

    def to_text(self) -> str:
        lines = [f"# scenario report  duration={self.duration_s:.2f}s wall={self.wall_s:.2f}s"]
        for event, outcome, detail in self.events:
            lines.append(
                f"{event.t:8.2f}  {event.kind:<12} {' '.join(map(str, event.args)):<30}"
                f" {outcome:<5} {detail}"
            )
        lines.append(f"faults: {len(self.fault_events)}")
        lines.append(f"min_zmp_margin: {self.min_zmp_margin}")
        lines.append(f"relay_envelopes: {self.relay_envelopes}")
        lines.append(f"latency: {self.latency_stats}")
        if self.aborted:
            lines.append(f"ABORTED: {self.aborted}")
        return "\n".join(lines) + "\n"


def parse_scenario(text: str) -> list[ScenarioEvent]:
    events = []
    last_t = -math.inf
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            t = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad timestamp {parts[0]!r}") from None
        if t < last_t:
            raise ValueError(f"line {lineno}: events must be time-ordered")
        last_t = t
        events.append(ScenarioEvent(t, parts[1], tuple(parts[2:])))
    return events


def load_scenario(path: str | Path) -> list[ScenarioEvent]:
    return parse_scenario(Path(path).read_text())


class ScenarioRunner:
    """Executes a timeline against a stack and grades each event."""

    def __init__(self, stack: AvatarStack, settle_s: float = 2.5):
        self.stack = stack
        self.settle_s = settle_s
        self.checkpoints: list[Checkpoint] = []
        self._replay_frames: list = []
        self._replay_idx = 0
        self._retargeter = None

    # -- event application --------------------------------------------------

    def _apply(self, event: ScenarioEvent) -> Checkpoint | None:
        stack = self.stack
        model = stack.model
        t = stack.clock.now()
        kind, args = event.kind, event.args
        if kind == "walk":
            heading, speed = float(args[0]), float(args[1])
            stack.publish_walk(heading, speed)
            # Commands apply at the next step boundary, so allow one period.
            return Checkpoint(
                event,
                t + stack.cfg.locomotion.step_period + 0.5,
                lambda s: abs(s.pipeline.command.speed - speed) < 1e-9
                and abs(s.pipeline.command.heading - heading) < 1e-9,
                "command reached pipeline",
            )
        if kind == "face":
            pattern = FACE_PATTERNS[args[0]]
            stack.publish_face(pattern)
            return Checkpoint(
                event,
                t + 1.0,
                lambda s: s.world.state.face_pattern == pattern,
                f"face LEDs show {args[0]}",
            )
        if kind == "arm_pose":
            target = preset_posture(model, standing_posture(model), args[0])
            stack.publish_posture(target)
            moved = [
                j
                for j in range(model.dof)
                if abs(target[j] - standing_posture(model)[j]) > 1e-9
            ]

            def arms_reached(s, target=target, moved=moved):
                q = s.world.state.joint_positions
                return all(abs(q[j] - target[j]) < 0.2 for j in moved)

            return Checkpoint(event, t + self.settle_s, arms_reached, f"posture {args[0]} tracked")
        if kind == "fingers":
            flex = 1.0 if args[0] == "close" else 0.0
            hands = ("left", "right") if args[1] == "both" else (args[1],)
            left = np.full(5, flex if "left" in hands else 0.0)
            right = np.full(5, flex if "right" in hands else 0.0)
            stack.publish_fingers(left, right)

            def fingers_reached(s, hands=hands, flex=flex):
                for hand in hands:
                    sl = model.group_slice(f"{hand}_hand")
                    hi = model.limits_high[sl]
                    closure = float(np.mean(s.world.state.joint_positions[sl] / hi))
                    if abs(closure - flex) > 0.25:
                        return False
                return True

            return Checkpoint(event, t + self.settle_s, fingers_reached, f"fingers {args[0]} {args[1]}")
        if kind == "head":
            yaw, pitch = float(args[0]), float(args[1])
            nan = float("nan")
            stack.publish_head(np.array([yaw, pitch, nan, nan, nan, nan, nan]))
            j = model.index_of("neck.neck_yaw")
            return Checkpoint(
                event,
                t + self.settle_s,
                lambda s: abs(s.world.state.joint_positions[j] - yaw) < 0.1,
                "head turned",
            )
        if kind == "eyelids":
            openness = float(args[0])
            closure = 1.0 - openness
            nan = float("nan")
            stack.publish_head(np.array([nan, nan, nan, nan, nan, nan, closure]))
            j = model.index_of("head.eyelids")
            return Checkpoint(
                event,
                t + self.settle_s,
                lambda s: abs(s.world.state.joint_positions[j] - closure) < 0.1,
                f"eyelids at openness {openness}",
            )
        if kind == "touch":
            patch, intensity = args[0], float(args[1])
            count_before = len(stack.haptic_log)
            stack.publish_touch(patch, intensity)
            link = stack.bus.connection(stack.conns["/operator/skin/events"])
            delay_ms = link.profile.one_way_delay_ms if link.profile else 0.0
            budget_s = (
                self.stack.cfg.feedback.routing_budget_ms + 2.0 * delay_ms + 20.0
            ) / 1000.0
            return Checkpoint(
                event,
                t + budget_s + 2 * stack.dt,
                lambda s: len(s.haptic_log) > count_before,
                f"haptic command within {budget_s*1000:.0f} ms budget",
            )
        if kind == "link":
            profile = LinkProfile(float(args[0]), float(args[1]), float(args[2]), seed=stack.seed)
            stack.apply_link_profile(profile)
            return Checkpoint(event, t + 2 * stack.dt, lambda s: True, "profile applied")
        if kind == "blackout":
            stack.blackout(args[0], float(args[1]))
            return Checkpoint(event, t + 2 * stack.dt, lambda s: True, f"loss={args[1]} on {args[0]}")
        if kind == "spawn_object":
            oid = int(args[0])
            if args[1] == "rel":
                base = stack.world.state.base_T
                offset = np.array([float(args[2]), float(args[3]), float(args[4])])
                pos = base[:3, :3] @ offset + base[:3, 3]
            else:
                pos = np.array([float(args[1]), float(args[2]), float(args[3])])
            stack.world.spawn_object(oid, tuple(pos))
            return Checkpoint(event, t + 2 * stack.dt, lambda s: oid in s.world.state.objects, "object spawned")
        if kind == "replay":
            frames = list(replay_session(args[0]))
            self._replay_frames.extend(frames)
            return Checkpoint(event, t + 2 * stack.dt, lambda s: True, f"{len(frames)} frames queued")
        raise ValueError(f"unknown scenario event kind {event.kind!r}")

    def _feed_replay(self) -> None:
        if self._replay_idx >= len(self._replay_frames):
            return
        from ..retargeting import Retargeter, calibrate
        from ..retargeting.session import frame_to_line

        stack = self.stack
        t = stack.clock.now()
        while self._replay_idx < len(self._replay_frames):
            frame = self._replay_frames[self._replay_idx]
            if frame.timestamp > t:
                break
            self._replay_idx += 1
            stack.ports["/operator/frame"].publish(
                frame_to_line(frame).encode(), "operator-frame"
            )
            if self._retargeter is None:
                window = [
                    f
                    for f in self._replay_frames[: self._replay_idx]
                    if f.timestamp <= self._replay_frames[0].timestamp + 1.0
                ]
                if frame.timestamp < self._replay_frames[0].timestamp + 1.0:
                    continue
                cal = calibrate(window, stack.cfg.retargeting.calibration_max_variance)
                self._retargeter = Retargeter(
                    stack.model, stack.cfg.retargeting, cal, stack.cfg.locomotion.max_speed
                )
            refs = self._retargeter.process(frame)
            stack.publish_posture(refs.posture_ref)
            head = [
                refs.head_ref["neck.neck_yaw"],
                refs.head_ref["neck.neck_pitch"],
                refs.head_ref["neck.neck_roll"],
                refs.head_ref["head.eyes_version"],
                refs.head_ref["head.eyes_vergence"],
                refs.head_ref["head.eyes_tilt"],
                refs.head_ref["head.eyelids"],
            ]
            stack.publish_head(np.array(head))
            stack.ports["/operator/fingers/ref"].publish(
                wire.pack_vector(
                    np.concatenate([refs.finger_refs["left"], refs.finger_refs["right"]])
                ),
                wire.FINGERS_TAG,
            )
            stack.publish_walk(refs.walking_cmd.heading, refs.walking_cmd.speed)
            stack.publish_face(refs.face_pattern)

    # -- main loop ------------------------------------------------------------

    def run(self, events: list[ScenarioEvent], extra_runout_s: float = 3.0) -> ScenarioReport:
        stack = self.stack
        report = ScenarioReport()
        wall0 = _time.perf_counter()
        idx = 0
        base_end = events[-1].t if events else 0.0
        try:
            while True:
                end_t = base_end + extra_runout_s
                if self._replay_frames:
                    end_t = max(end_t, self._replay_frames[-1].timestamp + extra_runout_s)
                if stack.clock.now() >= end_t:
                    break
                now = stack.clock.now()
                while idx < len(events) and events[idx].t <= now:
                    cp = self._apply(events[idx])
                    if cp is not None:
                        self.checkpoints.append(cp)
                    idx += 1
                self._feed_replay()
                stack.tick()
                now = stack.clock.now()
                for cp in self.checkpoints:
                    if not cp.passed and cp.check(stack):
                        cp.passed = True
                        cp.resolved_at = now
        except Divergence as exc:
            raise ScenarioAbort(f"divergence: {exc} dump={exc.dump}") from exc

        for cp in self.checkpoints:
            outcome = "pass" if cp.passed else "FAIL"
            detail = cp.detail
            if cp.passed and cp.resolved_at is not None:
                detail += f" (at {cp.resolved_at:.2f}s)"
                if cp.resolved_at > cp.deadline + 1e-9:
                    outcome = "FAIL"
                    detail += f" after deadline {cp.deadline:.2f}s"
            report.events.append((cp.event, outcome, detail))
        report.fault_events = list(stack.fault_log)
        report.min_zmp_margin = stack.min_zmp_margin
        if len(stack.probe.rtts_ms) >= 3:
            report.latency_stats = stack.probe.stats(stack.cfg.feedback.latency_window_s)
        report.relay_envelopes = stack.relay.envelope_count
        report.duration_s = stack.clock.now()
        report.wall_s = _time.perf_counter() - wall0
        return report


def run_scenario(stack: AvatarStack, events: list[ScenarioEvent]) -> ScenarioReport:
    return ScenarioRunner(stack).run(events)
