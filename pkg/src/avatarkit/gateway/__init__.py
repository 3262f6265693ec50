from .schema import (
    ROLE_COMMANDS,
    ROLES,
    SCHEMA_VERSION,
    BadRole,
    CommandRejected,
    telemetry_from_caches,
    validate_command,
)
from .server import GatewayServer, PortInUse
from .ws import WsBridge

__all__ = [
    "BadRole",
    "CommandRejected",
    "GatewayServer",
    "PortInUse",
    "ROLES",
    "ROLE_COMMANDS",
    "SCHEMA_VERSION",
    "WsBridge",
    "telemetry_from_caches",
    "validate_command",
]
