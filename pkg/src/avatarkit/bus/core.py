"""Peer-to-peer named-port publish/subscribe transport.

Ports are registered by hierarchical name in a per-subnet registry and wired
by explicit connections carrying one of three flavors: Reliable (ordered,
lossless), Datagram (may drop and reorder under an impairment profile) and
InProcess (immediate, profile ignored). Link impairment is applied at the
receiving queue of each connection, from a per-connection seeded RNG, so
delivery is a deterministic function of (message sequence, profile, seed).

With a ``SimClock`` the owner drives time via :meth:`Bus.advance`; with a
``WallClock`` a scheduler thread delivers due envelopes and each input port
runs callbacks on its own dispatcher thread.
"""

from __future__ import annotations

import heapq
import itertools
import queue
import random
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .clock import SimClock, WallClock
from .envelope import Envelope
from .errors import (
    DirectionMismatch,
    DuplicateName,
    MalformedName,
    UnknownConnection,
    UnknownPort,
)


class Carrier(Enum):
    RELIABLE = "reliable"
    DATAGRAM = "datagram"
    IN_PROCESS = "in_process"


class Direction(Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class LinkProfile:
    """One-way impairment: fixed delay, uniform jitter half-width, loss."""

    one_way_delay_ms: float = 0.0
    jitter_ms: float = 0.0
    loss: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.one_way_delay_ms < 0 or self.jitter_ms < 0:
            raise ValueError("delay and jitter must be >= 0")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError("loss must be in [0, 1]")


def validate_port_name(name: str) -> None:
    if not name or not name.startswith("/"):
        raise MalformedName(f"port name must start with '/': {name!r}")
    segments = name[1:].split("/")
    if any(seg == "" for seg in segments):
        raise MalformedName(f"port name has empty segment: {name!r}")
    if any(ch.isspace() for ch in name):
        raise MalformedName(f"port name contains whitespace: {name!r}")


@dataclass
class Delivery:
    envelope: Envelope
    arrived_at: float
    relay_hops: int


class Port:
    """Handle returned by registration. Output ports publish; input ports
    expose an inbox and subscriber callbacks."""

    def __init__(self, bus: "Bus", name: str, direction: Direction, subnet: str):
        self.bus = bus
        self.name = name
        self.direction = direction
        self.subnet = subnet
        self.endpoint = f"bus://{subnet}#{name}"
        self._subscribers: list[Callable[[Envelope], None]] = []
        self.inbox: deque[Delivery] = deque()
        self._dispatch_queue: Optional[queue.Queue] = None
        self._dispatcher: Optional[threading.Thread] = None

    def publish(self, payload: bytes, type_tag: str = "bytes") -> int:
        """Publish to every connection from this port; returns fan-out count."""
        if self.direction is not Direction.OUTPUT:
            raise DirectionMismatch(f"{self.name} is not an output port")
        return self.bus._publish(self, payload, type_tag)

    def subscribe(self, callback: Callable[[Envelope], None]) -> None:
        if self.direction is not Direction.INPUT:
            raise DirectionMismatch(f"{self.name} is not an input port")
        self._subscribers.append(callback)

    def drain(self) -> list[Delivery]:
        out = []
        while self.inbox:
            out.append(self.inbox.popleft())
        return out

    # Called by the bus with its lock released (sim mode) or from the port's
    # dispatcher thread (wall mode).
    def _deliver(self, delivery: Delivery) -> None:
        self.inbox.append(delivery)
        for cb in list(self._subscribers):
            cb(delivery.envelope)

    def _ensure_dispatcher(self) -> queue.Queue:
        if self._dispatch_queue is None:
            self._dispatch_queue = queue.Queue()
            self._dispatcher = threading.Thread(
                target=self._dispatch_loop, name=f"dispatch{self.name}", daemon=True
            )
            self._dispatcher.start()
        return self._dispatch_queue

    def _dispatch_loop(self):
        while True:
            item = self._dispatch_queue.get()
            if item is None:
                return
            self._deliver(item)


class Connection:
    def __init__(self, conn_id: int, src: Port, dst: Port, carrier: Carrier, tunnel=None):
        self.id = conn_id
        self.src = src
        self.dst = dst
        self.carrier = carrier
        self.tunnel = tunnel
        self.profile: Optional[LinkProfile] = None
        self._rng = random.Random(0)
        self._next_seq = 1
        self._last_due = -1.0
        self.sent = 0
        self.delivered = 0
        self.dropped = 0

    def set_profile(self, profile: Optional[LinkProfile]) -> None:
        self.profile = profile
        self._rng = random.Random(profile.seed if profile else 0)

    def take_seq(self) -> int:
        seq = self._next_seq
        self._next_seq += 1
        return seq


class Bus:
    def __init__(self, clock=None, default_subnet: str = "local"):
        self.clock = clock if clock is not None else SimClock()
        self.default_subnet = default_subnet
        self._registries: dict[str, dict[str, Port]] = {default_subnet: {}}
        self._foreign: dict[str, dict[str, str]] = {default_subnet: {}}
        self._connections: dict[int, Connection] = {}
        self._conn_counter = itertools.count(1)
        self._serial = itertools.count()
        self._heap: list = []
        self._lock = threading.RLock()
        self.tunnels: dict[frozenset, object] = {}
        self.relays: dict[str, object] = {}
        self._scheduler: Optional[threading.Thread] = None
        self._wakeup = threading.Condition(self._lock)
        self._stopping = False
        if isinstance(self.clock, WallClock):
            self._start_scheduler()

    # -- registry ---------------------------------------------------------

    def add_subnet(self, subnet_id: str) -> None:
        with self._lock:
            self._registries.setdefault(subnet_id, {})
            self._foreign.setdefault(subnet_id, {})

    def register_port(self, name: str, direction, subnet: Optional[str] = None) -> Port:
        if isinstance(direction, str):
            direction = Direction(direction)
        validate_port_name(name)
        subnet = subnet or self.default_subnet
        with self._lock:
            if subnet not in self._registries:
                raise UnknownPort(f"unknown subnet {subnet!r}")
            reg = self._registries[subnet]
            if name in reg or name in self._foreign[subnet]:
                raise DuplicateName(f"{name} already registered in {subnet}")
            port = Port(self, name, direction, subnet)
            reg[name] = port
            return port

    def register_foreign(self, name: str, endpoint: str, subnet: Optional[str] = None) -> None:
        """Record a name announced over the wire protocol (no local handle)."""
        validate_port_name(name)
        subnet = subnet or self.default_subnet
        with self._lock:
            if name in self._registries[subnet] or name in self._foreign[subnet]:
                raise DuplicateName(name)
            self._foreign[subnet][name] = endpoint

    def lookup(self, name: str, subnet: Optional[str] = None) -> str:
        """Resolve a name to its endpoint within one registry."""
        subnet = subnet or self.default_subnet
        with self._lock:
            reg = self._registries.get(subnet, {})
            if name in reg:
                return reg[name].endpoint
            foreign = self._foreign.get(subnet, {})
            if name in foreign:
                return foreign[name]
        raise UnknownPort(f"{name} not registered in {subnet}")

    def find_port(self, name: str) -> Port:
        with self._lock:
            for reg in self._registries.values():
                if name in reg:
                    return reg[name]
        raise UnknownPort(name)

    # -- connections ------------------------------------------------------

    def connect(self, src: str, dst: str, carrier: Carrier = Carrier.IN_PROCESS) -> int:
        """Wire an output port to an input port, resolving across the tunnel
        when the two live in different subnets."""
        with self._lock:
            src_port = self.find_port(src)
            dst_port = self._resolve_destination(src_port.subnet, dst)
            if src_port.direction is not Direction.OUTPUT:
                raise DirectionMismatch(f"source {src} is not an output port")
            if dst_port.direction is not Direction.INPUT:
                raise DirectionMismatch(f"destination {dst} is not an input port")
            tunnel = None
            if dst_port.subnet != src_port.subnet:
                tunnel = self._tunnel_between(src_port.subnet, dst_port.subnet)
            conn = Connection(next(self._conn_counter), src_port, dst_port, carrier, tunnel)
            self._connections[conn.id] = conn
            return conn.id

    def _resolve_destination(self, src_subnet: str, dst: str) -> Port:
        reg = self._registries.get(src_subnet, {})
        if dst in reg:
            return reg[dst]
        # Cross-subnet: resolve through a tunnel via the registry protocol.
        for key, tunnel in self.tunnels.items():
            if src_subnet in key:
                other = next(s for s in key if s != src_subnet)
                endpoint = tunnel.resolve(src_subnet, dst)
                if endpoint is not None:
                    return self._registries[other][dst]
        raise UnknownPort(dst)

    def _tunnel_between(self, a: str, b: str):
        tunnel = self.tunnels.get(frozenset((a, b)))
        if tunnel is None:
            raise UnknownPort(f"no tunnel joins {a} and {b}")
        return tunnel

    def connection(self, conn_id: int) -> Connection:
        with self._lock:
            try:
                return self._connections[conn_id]
            except KeyError:
                raise UnknownConnection(str(conn_id)) from None

    def set_link_profile(self, conn_id: int, profile: Optional[LinkProfile]) -> None:
        self.connection(conn_id).set_profile(profile)

    def set_link_profile_pair(self, fwd_id: int, ret_id: int, profile: LinkProfile) -> None:
        """Apply one profile symmetrically to a duplex connection pair."""
        self.connection(fwd_id).set_profile(profile)
        ret = self.connection(ret_id)
        ret.set_profile(
            LinkProfile(profile.one_way_delay_ms, profile.jitter_ms, profile.loss, profile.seed + 1)
        )

    # -- publish / delivery -----------------------------------------------

    def _publish(self, src_port: Port, payload: bytes, type_tag: str) -> int:
        with self._lock:
            now = self.clock.now()
            fanout = 0
            for conn in self._connections.values():
                if conn.src is not src_port:
                    continue
                fanout += 1
                conn.sent += 1
                env = Envelope(conn.take_seq(), self.clock.now_us(), src_port.name, type_tag, payload)
                due = self._impair(conn, now)
                if due is None:
                    conn.dropped += 1
                    continue
                heapq.heappush(self._heap, (due, next(self._serial), conn, env))
            if not self.clock.virtual:
                self._wakeup.notify_all()
        return fanout

    def _impair(self, conn: Connection, now: float) -> Optional[float]:
        """Apply carrier semantics + link profile; None means dropped."""
        if conn.carrier is Carrier.IN_PROCESS:
            return now
        profile = conn.profile
        if profile is None:
            delay = 0.0
        else:
            if conn.carrier is Carrier.DATAGRAM and profile.loss > 0.0:
                if conn._rng.random() < profile.loss:
                    return None
            lo = profile.one_way_delay_ms - profile.jitter_ms
            hi = profile.one_way_delay_ms + profile.jitter_ms
            delay = max(0.0, conn._rng.uniform(lo, hi)) / 1000.0
        due = now + delay
        if conn.carrier is Carrier.RELIABLE:
            # Streams never reorder: arrival clamps to FIFO.
            due = max(due, conn._last_due)
            conn._last_due = due
        return due

    def _deliver_one(self, due: float, conn: Connection, env: Envelope) -> None:
        conn.delivered += 1
        hops = 0
        if conn.tunnel is not None:
            conn.tunnel.relay.count_envelope()
            hops = 1
        delivery = Delivery(env, due, hops)
        if self.clock.virtual:
            conn.dst._deliver(delivery)
        else:
            conn.dst._ensure_dispatcher().put(delivery)

    # -- virtual time -----------------------------------------------------

    def advance(self, dt: float) -> None:
        """Advance the sim clock, delivering everything due on the way."""
        if not self.clock.virtual:
            raise RuntimeError("advance() requires a SimClock")
        target = self.clock.now() + dt
        while True:
            with self._lock:
                if not self._heap or self._heap[0][0] > target:
                    break
                due, _, conn, env = heapq.heappop(self._heap)
                self.clock.set(max(due, self.clock.now()))
            # Deliver outside the lock: callbacks may publish.
            self._deliver_one(due, conn, env)
        self.clock.set(target)

    def run_until_idle(self, max_time: float) -> None:
        """Advance until no scheduled deliveries remain or max_time reached."""
        while True:
            with self._lock:
                if not self._heap or self._heap[0][0] > max_time:
                    break
                horizon = self._heap[0][0] - self.clock.now()
            self.advance(horizon)
        if self.clock.now() < max_time:
            self.clock.set(max_time)

    # -- wall-clock scheduler ----------------------------------------------

    def _start_scheduler(self):
        self._scheduler = threading.Thread(target=self._scheduler_loop, name="bus-scheduler", daemon=True)
        self._scheduler.start()

    def _scheduler_loop(self):
        while True:
            batch = []
            with self._wakeup:
                if self._stopping:
                    return
                if not self._heap:
                    self._wakeup.wait(timeout=0.05)
                    continue
                due = self._heap[0][0]
                now = self.clock.now()
                if due > now:
                    self._wakeup.wait(timeout=min(due - now, 0.05))
                    continue
                while self._heap and self._heap[0][0] <= now:
                    d, _, conn, env = heapq.heappop(self._heap)
                    batch.append((d, conn, env))
            for d, conn, env in batch:
                self._deliver_one(d, conn, env)

    def stop(self):
        with self._lock:
            self._stopping = True
            self._wakeup.notify_all()
