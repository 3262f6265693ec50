"""Gateway: duplex TCP endpoint bridging the bus and the console.

One acceptor; a session thread per client; one broadcaster assembling
telemetry snapshots at 30 Hz. Commands are validated against model limits
and role gates, then serialized through a single queue onto the operator
subnet ports, preserving order. Console disconnects never touch the control
pipeline: the gateway only reads the stack's caches.
"""

from __future__ import annotations

import queue
import socket
import threading

import numpy as np

from ..sim.presets import preset_posture
from ..sim.stack import AvatarStack, standing_posture
from . import schema


class PortInUse(OSError):
    pass


class GatewayServer:
    def __init__(self, stack: AvatarStack, port: int, host: str = "127.0.0.1"):
        self.stack = stack
        self.host = host
        self.port = port
        self._clients: list[_ClientSession] = []
        self._clients_lock = threading.Lock()
        self._cmd_queue: "queue.Queue[tuple[_ClientSession, dict]]" = queue.Queue()
        self._stopping = threading.Event()
        try:
            self._listener = socket.create_server((host, port))
        except OSError as exc:
            raise PortInUse(f"{host}:{port}: {exc}") from exc
        self._threads = [
            threading.Thread(target=self._accept_loop, name="gw-accept", daemon=True),
            threading.Thread(target=self._command_loop, name="gw-cmd", daemon=True),
        ]
        self._last_snapshot_t = -1e30
        self._snapshot_count = 0
        for t in self._threads:
            t.start()

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        self._stopping.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._clients_lock:
            for client in self._clients:
                client.close()

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return
            # Small latency-sensitive lines: defeat Nagle batching.
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            session = _ClientSession(self, sock)
            with self._clients_lock:
                self._clients.append(session)
            session.start()

    def _drop(self, session: "_ClientSession") -> None:
        with self._clients_lock:
            if session in self._clients:
                self._clients.remove(session)

    # -- telemetry ----------------------------------------------------------

    def maybe_broadcast(self, now: float) -> dict | None:
        """Emit one snapshot if the 30 Hz cadence is due. Called from the
        stack loop (virtual or wall time)."""
        interval = 1.0 / self.stack.cfg.gateway.telemetry_rate_hz
        if self._last_snapshot_t < -1e29:
            self._last_snapshot_t = now - interval
        if now + 1e-9 < self._last_snapshot_t + interval:
            return None
        self._last_snapshot_t += interval
        if self._last_snapshot_t + interval < now:
            self._last_snapshot_t = now  # fell far behind: resync, no burst
        snapshot = schema.telemetry_from_caches(now, self.stack)
        self._snapshot_count += 1
        data = schema.encode(snapshot)
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.send_bytes(data)
        return snapshot

    # -- commands -----------------------------------------------------------

    def _command_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                session, cmd = self._cmd_queue.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                self._forward(cmd)
            except Exception as exc:  # defensive: a bad command must not kill the loop
                session.send(schema.error(f"internal: {exc}"))

    def submit(self, session: "_ClientSession", cmd: dict) -> None:
        self._cmd_queue.put((session, cmd))

    def _forward(self, cmd: dict) -> None:
        stack = self.stack
        kind = cmd["kind"]
        if kind == "walk":
            stack.publish_walk(cmd["heading"], cmd["speed"])
        elif kind == "arm_pose":
            base = standing_posture(stack.model)
            if "preset" in cmd:
                target = preset_posture(stack.model, base, cmd["preset"])
            else:
                target = base.copy()
                for joint, value in cmd["deltas"].items():
                    target[stack.model.index_of(joint)] = value
            stack.publish_posture(target)
        elif kind == "fingers":
            stack.publish_fingers(np.array(cmd["left"]), np.array(cmd["right"]))
        elif kind == "face":
            from ..retargeting import FACE_PATTERNS

            stack.publish_face(FACE_PATTERNS[cmd["label"]])
        elif kind == "eyelids":
            nan = float("nan")
            stack.publish_head(np.array([nan, nan, nan, nan, nan, nan, 1.0 - cmd["openness"]]))
        elif kind == "head":
            nan = float("nan")
            stack.publish_head(np.array([cmd["yaw"], cmd["pitch"], nan, nan, nan, nan, nan]))
        elif kind == "inject_touch":
            stack.publish_touch(cmd["patch"], cmd["intensity"])


class _ClientSession:
    def __init__(self, server: GatewayServer, sock: socket.socket):
        self.server = server
        self.sock = sock
        self.role: str | None = None
        self._send_lock = threading.Lock()
        self._thread = threading.Thread(target=self._read_loop, name="gw-client", daemon=True)

    def start(self) -> None:
        self._thread.start()

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def send(self, message: dict) -> None:
        self.send_bytes(schema.encode(message))

    def send_bytes(self, data: bytes) -> None:
        try:
            with self._send_lock:
                self.sock.sendall(data)
        except OSError:
            self.server._drop(self)

    def _read_loop(self) -> None:
        buf = b""
        try:
            while True:
                chunk = self.sock.recv(4096)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        self._handle_line(line.decode())
        except OSError:
            pass
        finally:
            self.server._drop(self)
            self.close()

    def _handle_line(self, line: str) -> None:
        try:
            msg = schema.decode_line(line)
        except schema.CommandRejected as exc:
            self.send(schema.error(str(exc)))
            return
        if msg.get("type") == "hello":
            role = msg.get("role")
            if role not in schema.ROLES:
                self.send(schema.error(f"unknown role {role!r}"))
                return
            self.role = role
            self.send(schema.welcome(role, self.server.stack.cfg, self.server.stack.model))
            return
        if msg.get("type") == "cmd":
            if self.role is None:
                self.send(schema.error("handshake required before commands"))
                return
            try:
                cmd = schema.validate_command(
                    msg, self.role, self.server.stack.cfg, self.server.stack.model
                )
            except (schema.BadRole, schema.CommandRejected, KeyError, TypeError, ValueError) as exc:
                self.send(schema.error(str(exc)))
                return
            self.server.submit(self, cmd)
            return
        self.send(schema.error(f"unknown message type {msg.get('type')!r}"))
