from .clock import SimClock, WallClock
from .core import Bus, Carrier, Direction, LinkProfile, Port, validate_port_name
from .envelope import Envelope, decode
from .errors import (
    BusError,
    DirectionMismatch,
    DuplicateName,
    InsufficientProbes,
    MalformedName,
    ProtocolError,
    RelayUnreachable,
    SubnetIdCollision,
    UnknownConnection,
    UnknownPort,
    WireFormatError,
)
from .latency import EchoResponder, LatencyStats, ProbeSession, measure_latency, one_way_stats
from .tunnel import RegistryService, Relay, Tunnel, TunnelConfig, add_relay, create_tunnel

__all__ = [
    "Bus",
    "BusError",
    "Carrier",
    "Direction",
    "DirectionMismatch",
    "DuplicateName",
    "EchoResponder",
    "Envelope",
    "InsufficientProbes",
    "LatencyStats",
    "LinkProfile",
    "MalformedName",
    "Port",
    "ProbeSession",
    "ProtocolError",
    "RegistryService",
    "Relay",
    "RelayUnreachable",
    "SimClock",
    "SubnetIdCollision",
    "Tunnel",
    "TunnelConfig",
    "UnknownConnection",
    "UnknownPort",
    "WallClock",
    "WireFormatError",
    "add_relay",
    "create_tunnel",
    "decode",
    "measure_latency",
    "one_way_stats",
    "validate_port_name",
]
