"""Two-subnet relay tunnel and the line-oriented name-registry protocol.

The relay joins two subnets so ports resolve transparently across them, as
if on one network. It forwards envelopes unmodified and counts them; name
resolution crosses it as ``QRY``/``ACK`` text lines:

    REG <name> <endpoint>
    QRY <name>
    ACK <endpoint>
    ERR <code>          codes: NOT_FOUND, DUPLICATE, MALFORMED
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    DuplicateName,
    MalformedName,
    ProtocolError,
    RelayUnreachable,
    SubnetIdCollision,
    UnknownPort,
)


def format_register(name: str, endpoint: str) -> str:
    return f"REG {name} {endpoint}"


def format_query(name: str) -> str:
    return f"QRY {name}"


def format_ack(endpoint: str) -> str:
    return f"ACK {endpoint}"


def format_error(code: str) -> str:
    return f"ERR {code}"


def parse_line(line: str) -> tuple:
    parts = line.strip().split(" ")
    if not parts or parts[0] not in ("REG", "QRY", "ACK", "ERR"):
        raise ProtocolError(f"unknown verb in {line!r}")
    verb = parts[0]
    args = parts[1:]
    expected = {"REG": 2, "QRY": 1, "ACK": 1, "ERR": 1}[verb]
    if len(args) != expected:
        raise ProtocolError(f"{verb} takes {expected} argument(s): {line!r}")
    return (verb, *args)


class RegistryService:
    """Answers registry-protocol lines against one subnet's registry."""

    def __init__(self, bus, subnet: str):
        self.bus = bus
        self.subnet = subnet

    def handle_line(self, line: str) -> str:
        try:
            msg = parse_line(line)
        except ProtocolError:
            return format_error("MALFORMED")
        if msg[0] == "QRY":
            try:
                return format_ack(self.bus.lookup(msg[1], self.subnet))
            except UnknownPort:
                return format_error("NOT_FOUND")
        if msg[0] == "REG":
            try:
                self.bus.register_foreign(msg[1], msg[2], self.subnet)
            except DuplicateName:
                return format_error("DUPLICATE")
            except MalformedName:
                return format_error("MALFORMED")
            return format_ack(msg[2])
        return format_error("MALFORMED")

    def serve_port(self, request_port, reply_port) -> None:
        """Answer protocol lines arriving as envelopes on ``request_port``."""

        def on_request(env):
            reply = self.handle_line(env.payload.decode())
            reply_port.publish(reply.encode(), type_tag="registry-line")

        request_port.subscribe(on_request)


class Relay:
    """Rendezvous joining two subnets; counts every forwarded envelope."""

    def __init__(self, address: str):
        self.address = address
        self.up = True
        self.envelope_count = 0
        self.control_count = 0

    def count_envelope(self) -> None:
        self.envelope_count += 1

    def forward_control(self, service: RegistryService, line: str) -> str:
        if not self.up:
            raise RelayUnreachable(self.address)
        self.control_count += 1
        return service.handle_line(line)


@dataclass(frozen=True)
class TunnelConfig:
    relay_address: str
    subnet_id: str


class Tunnel:
    def __init__(self, relay: Relay, subnet_a: str, subnet_b: str, services: dict):
        self.relay = relay
        self.subnets = frozenset((subnet_a, subnet_b))
        self._services = services

    def resolve(self, from_subnet: str, name: str) -> str | None:
        """Resolve ``name`` registered on the far side, through the relay."""
        other = next(s for s in self.subnets if s != from_subnet)
        reply = self.relay.forward_control(self._services[other], format_query(name))
        msg = parse_line(reply)
        if msg[0] == "ACK":
            return msg[1]
        return None


def create_tunnel(bus, cfg_a: TunnelConfig, cfg_b: TunnelConfig) -> Tunnel:
    """Join two subnets through one relay; see bus.Bus for resolution use."""
    if cfg_a.subnet_id == cfg_b.subnet_id:
        raise SubnetIdCollision(cfg_a.subnet_id)
    if cfg_a.relay_address != cfg_b.relay_address:
        raise RelayUnreachable("tunnel endpoints must share one relay")
    relay = bus.relays.get(cfg_a.relay_address)
    if relay is None or not relay.up:
        raise RelayUnreachable(cfg_a.relay_address)
    bus.add_subnet(cfg_a.subnet_id)
    bus.add_subnet(cfg_b.subnet_id)
    services = {
        cfg_a.subnet_id: RegistryService(bus, cfg_a.subnet_id),
        cfg_b.subnet_id: RegistryService(bus, cfg_b.subnet_id),
    }
    tunnel = Tunnel(relay, cfg_a.subnet_id, cfg_b.subnet_id, services)
    bus.tunnels[tunnel.subnets] = tunnel
    return tunnel


def add_relay(bus, address: str) -> Relay:
    relay = Relay(address)
    bus.relays[address] = relay
    return relay
