class BusError(Exception):
    pass


class MalformedName(BusError):
    pass


class DuplicateName(BusError):
    pass


class UnknownPort(BusError):
    pass


class DirectionMismatch(BusError):
    pass


class UnknownConnection(BusError):
    pass


class RelayUnreachable(BusError):
    pass


class SubnetIdCollision(BusError):
    pass


class InsufficientProbes(BusError):
    pass


class WireFormatError(BusError):
    pass


class ProtocolError(BusError):
    pass
