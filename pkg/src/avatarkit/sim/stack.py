"""Full-system wiring: operator subnet and avatar subnet joined by a relay
tunnel, with the control pipeline, servo boards, kinematic world, feedback
routing and latency probing all exchanging traffic over the bus.

One `tick()` advances the bus by the sim step, applies freshly arrived
commands, runs the 100 Hz control pipeline and the 1 kHz boards, steps the
world, and publishes measurements back across the link. With the default
SimClock everything is deterministic per seed; with a WallClock the same
stack runs live behind the gateway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..bus import (
    Bus,
    Carrier,
    EchoResponder,
    LinkProfile,
    ProbeSession,
    SimClock,
    TunnelConfig,
    add_relay,
    create_tunnel,
)
from ..config import AppConfig
from ..feedback.frames import FramePacer, pack_frame
from ..feedback.routing import (
    GLOVE_TAG,
    HAPTIC_TAG,
    SKIN_TAG,
    compute_finger_feedback,
    pack_haptic,
    pack_skin_event,
    route_skin_to_haptics,
    unpack_skin_event,
)
from ..locomotion import ControlPipeline, WalkingCommand, measured_zmp
from ..locomotion.centroidal import foot_pose_T
from ..locomotion.whole_body import active_joint_indices
from ..locomotion.zmp import NoGroundContact
from ..lowlevel import BoardSet, ControlMode
from ..model import build_icub3_model
from ..model.kinematics import fk_world, transform
from ..retargeting.mapping import retarget_fingers
from . import wire
from .world import World

RELAY_ADDRESS = "relay.lan:1194"

# Cross-link topic map: (operator-side port, avatar-side port, carrier).
# Periodic reference streams ride datagrams (loss-tolerant, like UDP command
# streaming); sporadic events ride the reliable stream carrier.
COMMAND_LINKS = [
    ("/operator/locomotion/cmd", "/avatar/locomotion/cmd", "datagram"),
    ("/operator/posture/ref", "/avatar/posture/ref", "datagram"),
    ("/operator/head/ref", "/avatar/head/ref", "datagram"),
    ("/operator/fingers/ref", "/avatar/fingers/ref", "datagram"),
    ("/operator/face/cmd", "/avatar/face/cmd", "reliable"),
    ("/operator/touch/inject", "/avatar/touch/inject", "reliable"),
]
MEASUREMENT_LINKS = [
    ("/avatar/joints/state", "/operator/joints/state", "datagram"),
    ("/avatar/skin/events", "/operator/skin/events", "reliable"),
    ("/avatar/locomotion/diag", "/operator/diag", "datagram"),
    ("/avatar/face/state", "/operator/face/state", "reliable"),
    ("/avatar/glove/forces", "/operator/glove/forces", "datagram"),
]

_CARRIERS = {"datagram": Carrier.DATAGRAM, "reliable": Carrier.RELIABLE}


@dataclass
class TopicCache:
    value: object = None
    arrived_at: float = -math.inf
    count: int = 0

    def update(self, value, t: float) -> None:
        self.value = value
        self.arrived_at = t
        self.count += 1

    def age(self, now: float) -> float:
        return now - self.arrived_at


def standing_posture(model) -> np.ndarray:
    """Bent-knee standing posture consistent with the configured CoM height."""
    q = model.zero_vector()
    for leg in ("left_leg", "right_leg"):
        s = model.group_slice(leg)
        q[s.start + 0] = -0.3  # hip pitch
        q[s.start + 3] = 0.6  # knee
        q[s.start + 4] = -0.3  # ankle pitch
    return q


class AvatarStack:
    def __init__(
        self,
        cfg: AppConfig,
        clock=None,
        seed: Optional[int] = None,
        link_profile: Optional[LinkProfile] = None,
    ):
        self.cfg = cfg
        self.seed = cfg.simulator.seed if seed is None else seed
        self.clock = clock if clock is not None else SimClock()
        self.dt = cfg.simulator.dt
        self.model = build_icub3_model()

        # -- network fabric: two subnets joined by one relay ------------------
        self.bus = Bus(self.clock, default_subnet="avatar")
        self.relay = add_relay(self.bus, RELAY_ADDRESS)
        self.tunnel = create_tunnel(
            self.bus,
            TunnelConfig(RELAY_ADDRESS, "avatar"),
            TunnelConfig(RELAY_ADDRESS, "operator"),
        )

        # -- robot-side components -------------------------------------------
        q0 = standing_posture(self.model)
        frames = fk_world(self.model, q0)
        base0 = transform(p=[0.0, 0.0, -float(frames["left_leg/sole"][2, 3])])
        omega = math.sqrt(cfg.locomotion.gravity / cfg.locomotion.com_height)
        self.world = World(self.model, cfg.simulator, q0, base0, omega, seed=self.seed)
        self.pipeline = ControlPipeline(self.model, cfg.locomotion, q0, base0, t0=self.clock.now())
        self.boards = BoardSet(self.model, cfg.lowlevel)
        self.boards.attach_bus(self.bus, "avatar")
        self.boards.update_measurements(q0, np.zeros(self.model.dof))
        self._active_joints = active_joint_indices(self.model)
        active_set = set(self._active_joints)
        self._aux_joints = np.array(
            [j for j in range(self.model.dof) if j not in active_set], dtype=int
        )
        for j in range(self.model.dof):
            self.boards.set_mode(j, ControlMode.POSITION_DIRECT if j in active_set else ControlMode.POSITION)
        self.boards.set_references(q0, self.clock.now())
        self._aux_targets = q0.copy()  # head/neck/hand channel targets

        # -- ports -------------------------------------------------------------
        self.ports = {}
        for name, tag in [
            ("/avatar/joints/state", wire.JOINTS_TAG),
            ("/avatar/skin/events", SKIN_TAG),
            ("/avatar/camera/frames", "camera"),
            ("/avatar/locomotion/diag", wire.DIAG_TAG),
            ("/avatar/face/state", wire.FACE_TAG),
            ("/avatar/glove/forces", "glove-forces"),
            ("/avatar/probe/out", "probe"),
        ]:
            self.ports[name] = self.bus.register_port(name, "output", "avatar")
        for name in [
            "/avatar/locomotion/cmd",
            "/avatar/posture/ref",
            "/avatar/head/ref",
            "/avatar/fingers/ref",
            "/avatar/face/cmd",
            "/avatar/touch/inject",
            "/avatar/probe/in",
        ]:
            self.ports[name] = self.bus.register_port(name, "input", "avatar")
        for name in [
            "/operator/locomotion/cmd",
            "/operator/posture/ref",
            "/operator/head/ref",
            "/operator/fingers/ref",
            "/operator/face/cmd",
            "/operator/touch/inject",
            "/operator/probe/out",
            "/operator/haptic/cmd",
            "/operator/glove/feedback",
            "/operator/latency",
            "/operator/frame",
        ]:
            self.ports[name] = self.bus.register_port(name, "output", "operator")
        for name in [
            "/operator/joints/state",
            "/operator/skin/events",
            "/operator/camera/frames",
            "/operator/diag",
            "/operator/face/state",
            "/operator/glove/forces",
            "/operator/probe/in",
        ]:
            self.ports[name] = self.bus.register_port(name, "input", "operator")

        # -- connections --------------------------------------------------------
        self.conns: dict[str, int] = {}
        for src, dst, carrier in COMMAND_LINKS + MEASUREMENT_LINKS:
            self.conns[dst] = self.bus.connect(src, dst, _CARRIERS[carrier])
        self.conns["/operator/camera/frames"] = self.bus.connect(
            "/avatar/camera/frames", "/operator/camera/frames", Carrier.DATAGRAM
        )
        self.conns["probe_fwd"] = self.bus.connect(
            "/operator/probe/out", "/avatar/probe/in", Carrier.DATAGRAM
        )
        self.conns["probe_ret"] = self.bus.connect(
            "/avatar/probe/out", "/operator/probe/in", Carrier.DATAGRAM
        )
        EchoResponder(self.ports["/avatar/probe/in"], self.ports["/avatar/probe/out"])
        self.probe = ProbeSession(
            self.bus,
            self.conns["probe_fwd"],
            self.conns["probe_ret"],
            interval_s=1.0 / cfg.feedback.latency_probe_hz,
        )

        # Voice/auditory: opaque-payload audio channels, pacing only (no
        # codecs). Operator speech goes out through the avatar speaker; the
        # avatar microphones come back to the operator headphones.
        self.ports["/operator/voice/out"] = self.bus.register_port(
            "/operator/voice/out", "output", "operator"
        )
        self.ports["/avatar/voice/in"] = self.bus.register_port("/avatar/voice/in", "input", "avatar")
        self.ports["/avatar/audio/out"] = self.bus.register_port(
            "/avatar/audio/out", "output", "avatar"
        )
        self.ports["/operator/audio/in"] = self.bus.register_port(
            "/operator/audio/in", "input", "operator"
        )
        self.conns["/avatar/voice/in"] = self.bus.connect(
            "/operator/voice/out", "/avatar/voice/in", Carrier.DATAGRAM
        )
        self.conns["/operator/audio/in"] = self.bus.connect(
            "/avatar/audio/out", "/operator/audio/in", Carrier.DATAGRAM
        )
        self._voice_pacer = FramePacer(rate_fps=50.0)  # audio chunk cadence cap
        self._audio_pacer = FramePacer(rate_fps=50.0)

        if link_profile is not None:
            self.apply_link_profile(link_profile)

        # -- caches and routing --------------------------------------------------
        self.caches: dict[str, TopicCache] = {}
        self._applied: dict[str, int] = {}
        for port_name in [
            "/avatar/locomotion/cmd",
            "/avatar/posture/ref",
            "/avatar/head/ref",
            "/avatar/fingers/ref",
            "/avatar/face/cmd",
            "/avatar/touch/inject",
            "/operator/joints/state",
            "/operator/skin/events",
            "/operator/camera/frames",
            "/operator/diag",
            "/operator/face/state",
            "/operator/glove/forces",
        ]:
            self._install_cache(port_name)

        self._wire_operator_feedback()

        self.frame_pacer = FramePacer(cfg.feedback.frame_rate_fps)
        self._diag_every = max(1, int(round(cfg.locomotion.rate_hz / 10.0)))
        self._latency_every = max(1, int(round(1.0 / self.dt)))
        self._tick_count = 0
        self._last_zmp_meas: np.ndarray | None = None
        self.q_ref_trace: list[np.ndarray] = []
        self.record_q_ref = False
        self.haptic_log: list[tuple[float, object]] = []
        self.min_zmp_margin = math.inf
        self.fault_log = []
        self.on_tick: list = []  # per-tick hooks (gateway broadcaster, recorders)

    # -- wiring helpers ---------------------------------------------------------

    def _install_cache(self, port_name: str) -> None:
        cache = TopicCache()
        self.caches[port_name] = cache

        def on_env(env, cache=cache):
            cache.update(env, self.clock.now())

        self.ports[port_name].subscribe(on_env)

    def _wire_operator_feedback(self) -> None:
        """Operator-side routing: skin -> haptics, contact forces -> glove."""

        def on_skin(env):
            event = unpack_skin_event(env.payload)
            cmd = route_skin_to_haptics(event, mapping=self.cfg.haptic_map, cfg=self.cfg.feedback)
            if cmd is not None:
                self.ports["/operator/haptic/cmd"].publish(pack_haptic(cmd), HAPTIC_TAG)
                self.haptic_log.append((self.clock.now(), cmd))

        self.ports["/operator/skin/events"].subscribe(on_skin)

        def on_glove_forces(env):
            forces = wire.unpack_vector(env.payload)
            fb = compute_finger_feedback(
                forces,
                brake_max=self.cfg.feedback.brake_max_n,
                vibe_scale=self.cfg.feedback.vibration_full_scale_n,
            )
            payload = wire.pack_vector(np.concatenate([fb.brake_force_n, fb.vibration]))
            self.ports["/operator/glove/feedback"].publish(payload, GLOVE_TAG)

        self.ports["/operator/glove/forces"].subscribe(on_glove_forces)

    def apply_link_profile(self, profile: LinkProfile) -> None:
        """Impair every cross-subnet connection, symmetric per direction."""
        for i, (name, conn_id) in enumerate(sorted(self.conns.items())):
            derived = LinkProfile(
                profile.one_way_delay_ms, profile.jitter_ms, profile.loss, profile.seed + i
            )
            self.bus.set_link_profile(conn_id, derived)

    def blackout(self, topic: str, loss: float = 1.0) -> None:
        """Total (or partial) loss on one cross link, e.g. the command topic."""
        conn = self.bus.connection(self.conns[topic])
        base = conn.profile or LinkProfile()
        self.bus.set_link_profile(
            self.conns[topic],
            LinkProfile(base.one_way_delay_ms, base.jitter_ms, loss, base.seed),
        )

    # -- operator-side command publishing (gateway / scenario entry points) ------

    def publish_walk(self, heading: float, speed: float) -> None:
        self.ports["/operator/locomotion/cmd"].publish(
            wire.pack_walk(WalkingCommand(heading, speed)), wire.WALK_TAG
        )

    def publish_posture(self, q_ref: np.ndarray) -> None:
        self.ports["/operator/posture/ref"].publish(wire.pack_vector(q_ref), wire.POSTURE_TAG)

    def publish_head(self, head_vals: np.ndarray) -> None:
        self.ports["/operator/head/ref"].publish(wire.pack_vector(head_vals), wire.HEAD_TAG)

    def publish_fingers(self, flexions_left, flexions_right) -> None:
        motors = np.concatenate(
            [retarget_fingers(flexions_left), retarget_fingers(flexions_right)]
        )
        self.ports["/operator/fingers/ref"].publish(wire.pack_vector(motors), wire.FINGERS_TAG)

    def publish_face(self, pattern: int) -> None:
        self.ports["/operator/face/cmd"].publish(wire.pack_face(pattern), wire.FACE_TAG)

    def publish_touch(self, patch: str, intensity: float, taxels=(0, 1, 2)) -> None:
        payload = patch.encode() + b"|" + repr(float(intensity)).encode()
        payload += b"|" + ",".join(str(t) for t in taxels).encode()
        self.ports["/operator/touch/inject"].publish(payload, "touch-inject")

    def publish_voice_chunk(self, payload: bytes) -> bool:
        """Operator speech chunk; opaque payload, paced, newest wins."""
        if self._voice_pacer.offer(payload, self.clock.now()) is None:
            return False
        self.ports["/operator/voice/out"].publish(payload, "audio-chunk")
        return True

    def publish_audio_chunk(self, payload: bytes) -> bool:
        """Avatar microphone chunk toward the operator headphones."""
        if self._audio_pacer.offer(payload, self.clock.now()) is None:
            return False
        self.ports["/avatar/audio/out"].publish(payload, "audio-chunk")
        return True

    # -- main loop ----------------------------------------------------------------

    def tick(self) -> None:
        """One sim step: advance the bus, apply arrivals, control, step world,
        publish measurements."""
        if self.clock.virtual:
            self.bus.advance(self.dt)
        t = self.clock.now()
        self._tick_count += 1
        self.probe.tick()

        self._apply_arrivals(t)

        out = self.pipeline.tick(
            t,
            self.world.state.joint_positions,
            self.world.state.base_T,
            self.world.state.com,
            self.world.state.com_vel,
            self._last_zmp_meas,
        )
        if out.faults:
            self.fault_log.extend(out.faults)
        if np.isfinite(out.diag["zmp_margin"]):
            self.min_zmp_margin = min(self.min_zmp_margin, out.diag["zmp_margin"])

        # Servo references: QP output for the body, auxiliary channels as-is.
        q_target = out.q_ref.copy()
        q_target[self._aux_joints] = self._aux_targets[self._aux_joints]
        for j in self._active_joints:
            self.boards.set_reference(j, float(q_target[j]), t)
        self.boards.update_measurements(
            self.world.state.joint_positions, self.world.state.joint_velocities
        )
        n_board_ticks = max(1, int(round(self.dt / self.cfg.lowlevel.board_dt)))
        self.boards.tick(t, n_board_ticks)
        targets = self.boards.position_targets(t + self.dt)

        self.world.step(
            self.dt,
            targets,
            out.zmp_cmd,
            out.foot_poses,
            out.foot_contacts,
            out.swing_pose,
            out.base_yaw_ref,
        )
        if self.record_q_ref:
            self.q_ref_trace.append(out.q_ref.copy())

        wrenches = self.world.foot_wrenches(out.zmp_cmd)
        try:
            self._last_zmp_meas = measured_zmp(
                wrenches, self.world.sensor_poses(), self.cfg.locomotion.fz_contact_threshold
            )
        except NoGroundContact:
            self._last_zmp_meas = None

        self._publish_measurements(t, out)
        for hook in self.on_tick:
            hook(t)

    def _apply_arrivals(self, t: float) -> None:
        def fresh(name):
            cache = self.caches[name]
            if cache.count > self._applied.get(name, 0):
                self._applied[name] = cache.count
                return cache.value
            return None

        env = fresh("/avatar/locomotion/cmd")
        if env is not None:
            self.pipeline.set_command(wire.unpack_walk(env.payload), t)
        env = fresh("/avatar/posture/ref")
        if env is not None:
            self.pipeline.set_posture_reference(wire.unpack_vector(env.payload))
        env = fresh("/avatar/head/ref")
        if env is not None:
            vals = wire.unpack_vector(env.payload)
            head_joints = ["neck.neck_yaw", "neck.neck_pitch", "neck.neck_roll",
                           "head.eyes_version", "head.eyes_vergence", "head.eyes_tilt",
                           "head.eyelids"]
            # NaN marks channels the sender leaves untouched, so eyelid and
            # head commands do not clobber each other.
            for name, v in zip(head_joints, vals):
                if not np.isfinite(v):
                    continue
                j = self.model.index_of(name)
                lo, hi = self.model.limits_low[j], self.model.limits_high[j]
                self._aux_targets[j] = float(np.clip(v, lo, hi))
                self.boards.set_reference(j, self._aux_targets[j], t)
        env = fresh("/avatar/fingers/ref")
        if env is not None:
            motors = wire.unpack_vector(env.payload)
            for hand, block in (("left_hand", motors[:9]), ("right_hand", motors[9:18])):
                s = self.model.group_slice(hand)
                lo, hi = self.model.limits_low[s], self.model.limits_high[s]
                vals = lo + np.clip(block, 0.0, 1.0) * (hi - lo)
                for k, j in enumerate(range(s.start, s.stop)):
                    self._aux_targets[j] = float(vals[k])
                    self.boards.set_reference(j, float(vals[k]), t)
        env = fresh("/avatar/face/cmd")
        if env is not None:
            self.world.set_face(wire.unpack_face(env.payload))
            self.ports["/avatar/face/state"].publish(
                wire.pack_face(self.world.state.face_pattern), wire.FACE_TAG
            )
        env = fresh("/avatar/touch/inject")
        if env is not None:
            patch, intensity, taxels = env.payload.split(b"|")
            # Queued on the world; _publish_measurements drains it to the bus.
            self.world.inject_touch(
                patch.decode(),
                tuple(int(x) for x in taxels.decode().split(",") if x),
                float(intensity),
            )

    def _publish_measurements(self, t: float, out) -> None:
        s = self.world.state
        from ..model.rotations import mat_to_quat

        self.ports["/avatar/joints/state"].publish(
            wire.pack_joints_state(
                t, s.joint_positions, s.base_T[:3, 3], mat_to_quat(s.base_T[:3, :3]), s.foot_contacts
            ),
            wire.JOINTS_TAG,
        )
        # Skin events injected directly at the world (recipient's physical touch).
        for event in self.world.pending_skin:
            self.ports["/avatar/skin/events"].publish(pack_skin_event(event), SKIN_TAG)
        self.world.pending_skin.clear()

        frame = self.frame_pacer.offer(self.world.camera_frame(), t)
        if frame is not None:
            self.ports["/avatar/camera/frames"].publish(pack_frame(frame), "camera")

        if self._tick_count % self._diag_every == 0:
            self.ports["/avatar/locomotion/diag"].publish(
                wire.diag_to_text(out.diag).encode(), wire.DIAG_TAG
            )
        if self._tick_count % self._latency_every == 0 and len(self.probe.rtts_ms) >= 3:
            stats = self.probe.stats(self.cfg.feedback.latency_window_s)
            self.ports["/operator/latency"].publish(wire.pack_latency(stats), wire.LATENCY_TAG)

        self._publish_glove_forces(t)

    def _publish_glove_forces(self, t: float) -> None:
        """Synthetic fingertip contact: closing the hand near an object loads
        the fingers proportionally to closure."""
        if not self.world.state.objects:
            return
        frames = None
        forces = np.zeros(10)
        touched = False
        for h, hand in enumerate(("left", "right")):
            s = self.model.group_slice(f"{hand}_hand")
            hi = self.model.limits_high[s]
            closure = float(np.mean(self.world.state.joint_positions[s] / hi))
            if closure < 0.2:
                continue
            if frames is None:
                frames = fk_world(self.model, self.world.state.joint_positions, self.world.state.base_T)
            palm = frames[f"{hand}_arm/hand"][:3, 3]
            for pos, _yaw in self.world.state.objects.values():
                if np.linalg.norm(palm - np.asarray(pos)) < 0.35:
                    forces[h * 5 : h * 5 + 5] = closure * 15.0
                    touched = True
                    break
        if touched:
            self.ports["/avatar/glove/forces"].publish(wire.pack_vector(forces), "glove-forces")

    def executed_zmp_margin(self) -> float:
        """Margin of the latest wrench-derived ZMP inside the current contact
        polygon (both from the same world tick)."""
        if self._last_zmp_meas is None:
            return math.nan
        from ..model.kinematics import polygon_margin, support_polygon

        contacts = self.world.state.foot_contacts
        if all(contacts.values()):
            stance = "double"
            poses = {f: foot_pose_T(*p) for f, p in self.world.state.foot_poses.items()}
        else:
            stance = "left" if contacts["left"] else "right"
            poses = {stance: foot_pose_T(*self.world.state.foot_poses[stance])}
        polygon = support_polygon(self.model, stance, poses)
        return polygon_margin(polygon, self._last_zmp_meas)

    def run(self, duration_s: float) -> None:
        steps = int(round(duration_s / self.dt))
        for _ in range(steps):
            self.tick()


class LiveRunner:
    """Wall-clock loop: ticks the stack at the sim rate until stopped."""

    def __init__(self, stack: AvatarStack):
        if stack.clock.virtual:
            raise ValueError("LiveRunner needs a WallClock stack")
        self.stack = stack
        self._stop = False
        import threading

        self.thread = threading.Thread(target=self._loop, name="sim-loop", daemon=True)

    def start(self) -> "LiveRunner":
        self.thread.start()
        return self

    def stop(self) -> None:
        self._stop = True
        self.thread.join(timeout=2.0)

    def _loop(self) -> None:
        import time

        next_due = time.monotonic()
        while not self._stop:
            self.stack.tick()
            next_due += self.stack.dt
            delay = next_due - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_due = time.monotonic()  # fell behind: resync
