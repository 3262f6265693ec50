"""Minimal RFC 6455 WebSocket bridge for browser consoles.

Each WebSocket client gets a private TCP connection to the gateway; text
frames and newline-delimited gateway messages map one-to-one. Server-side
only, no extensions, text frames only.
"""

from __future__ import annotations

import base64
import hashlib
import socket
import struct
import threading

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _GUID).encode()).digest()
    return base64.b64encode(digest).decode()


class BufferedReader:
    """Socket-like recv() that first drains bytes read past the handshake."""

    def __init__(self, sock: socket.socket, initial: bytes = b""):
        self._sock = sock
        self._buf = initial

    def recv(self, n: int) -> bytes:
        if self._buf:
            out, self._buf = self._buf[:n], self._buf[n:]
            return out
        return self._sock.recv(n)


def _read_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("websocket peer closed")
        buf += chunk
    return buf


def read_frame(sock) -> tuple[int, bytes]:
    """Returns (opcode, payload); handles masked client frames. ``sock`` is
    anything with recv(), including a BufferedReader."""
    head = _read_exact(sock, 2)
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", _read_exact(sock, 2))
    elif length == 127:
        (length,) = struct.unpack(">Q", _read_exact(sock, 8))
    mask = _read_exact(sock, 4) if masked else b"\x00" * 4
    payload = bytearray(_read_exact(sock, length))
    if masked:
        for i in range(length):
            payload[i] ^= mask[i % 4]
    return opcode, bytes(payload)


def write_text_frame(sock: socket.socket, payload: bytes) -> None:
    header = bytearray([0x81])
    n = len(payload)
    if n < 126:
        header.append(n)
    elif n < 1 << 16:
        header.append(126)
        header += struct.pack(">H", n)
    else:
        header.append(127)
        header += struct.pack(">Q", n)
    sock.sendall(bytes(header) + payload)


def _handshake(sock: socket.socket) -> bytes | None:
    """Performs the HTTP upgrade; returns bytes read past the request (a
    pipelining client's first frames) or None on failure."""
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            return None
        data += chunk
    request, leftover = data.split(b"\r\n\r\n", 1)
    headers = {}
    for line in request.split(b"\r\n")[1:]:
        if b":" in line:
            k, v = line.split(b":", 1)
            headers[k.strip().lower()] = v.strip()
    key = headers.get(b"sec-websocket-key")
    if key is None:
        sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        return None
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {_accept_key(key.decode())}\r\n\r\n"
    )
    sock.sendall(response.encode())
    return leftover


class WsBridge:
    def __init__(self, gateway_host: str, gateway_port: int, listen_port: int, host: str = "127.0.0.1"):
        self.gateway = (gateway_host, gateway_port)
        self._listener = socket.create_server((host, listen_port))
        self._stopping = threading.Event()
        self.port = listen_port
        threading.Thread(target=self._accept_loop, name="ws-accept", daemon=True).start()

    def close(self) -> None:
        self._stopping.set()
        try:
            self._listener.close()
        except OSError:
            pass

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                client, _ = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._serve, args=(client,), daemon=True).start()

    def _serve(self, client: socket.socket) -> None:
        try:
            client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            leftover = _handshake(client)
            if leftover is None:
                client.close()
                return
            upstream = socket.create_connection(self.gateway)
            upstream.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError:
            client.close()
            return
        reader = BufferedReader(client, leftover)

        def pump_up():
            try:
                while True:
                    opcode, payload = read_frame(reader)
                    if opcode == 0x8:  # close
                        break
                    if opcode in (0x1, 0x2) and payload:
                        if not payload.endswith(b"\n"):
                            payload += b"\n"
                        upstream.sendall(payload)
                    elif opcode == 0x9:  # ping -> pong
                        client.sendall(b"\x8a" + bytes([len(payload)]) + payload)
            except (OSError, ConnectionError):
                pass
            finally:
                for s in (client, upstream):
                    try:
                        s.close()
                    except OSError:
                        pass

        def pump_down():
            buf = b""
            try:
                while True:
                    chunk = upstream.recv(4096)
                    if not chunk:
                        break
                    buf += chunk
                    while b"\n" in buf:
                        line, buf = buf.split(b"\n", 1)
                        if line:
                            write_text_frame(client, line)
            except (OSError, ConnectionError):
                pass
            finally:
                for s in (client, upstream):
                    try:
                        s.close()
                    except OSError:
                        pass

        threading.Thread(target=pump_up, daemon=True).start()
        threading.Thread(target=pump_down, daemon=True).start()
