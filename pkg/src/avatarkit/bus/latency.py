"""Round-trip latency probing. One-way estimates are RTT/2: the echo
reflects the sender's own send time, so no cross-host clock sync is needed."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import InsufficientProbes

_PROBE = struct.Struct("<IQ")  # probe index, original send_time_us

PROBE_TAG = "latency-probe"
ECHO_TAG = "latency-echo"


@dataclass(frozen=True)
class LatencyStats:
    samples: int
    mean_ms: float
    p95_ms: float
    max_ms: float
    window_s: float

    def __post_init__(self):
        # Tolerate one-ulp drift from the mean's division.
        slack = 1e-12 * (1.0 + abs(self.p95_ms))
        if self.samples and not (self.mean_ms <= self.p95_ms + slack and self.p95_ms <= self.max_ms + slack):
            raise ValueError("latency stats must satisfy mean <= p95 <= max")


def one_way_stats(rtts_ms: list[float], window_s: float) -> LatencyStats:
    """Fold round-trip samples into one-way stats (RTT/2, nearest-rank p95)."""
    if len(rtts_ms) < 3:
        raise InsufficientProbes(f"{len(rtts_ms)} echoes, need >= 3")
    one_way = sorted(r / 2.0 for r in rtts_ms)
    n = len(one_way)
    rank = max(0, -(-95 * n // 100) - 1)  # ceil(0.95 n), 0-based
    return LatencyStats(
        samples=n,
        mean_ms=sum(one_way) / n,
        p95_ms=one_way[rank],
        max_ms=one_way[-1],
        window_s=window_s,
    )


class EchoResponder:
    """Reflects probe payloads verbatim from an input port to an output."""

    def __init__(self, request_port, reply_port):
        def on_probe(env):
            if env.type_tag == PROBE_TAG:
                reply_port.publish(env.payload, type_tag=ECHO_TAG)

        request_port.subscribe(on_probe)


class ProbeSession:
    """Incremental prober over a duplex connection pair.

    Publishes probes on the forward connection's source port at a fixed
    interval and collects echoes from the return connection's destination
    inbox. Usable tick-by-tick in a live stack or driven to completion by
    :func:`measure_latency`.
    """

    def __init__(self, bus, fwd_conn_id: int, ret_conn_id: int, interval_s: float):
        self.bus = bus
        self.fwd = bus.connection(fwd_conn_id)
        self.ret = bus.connection(ret_conn_id)
        self.interval_s = interval_s
        self.rtts_ms: list[float] = []
        self._sent = 0
        self._next_send = bus.clock.now()
        self.ret.dst.subscribe(self._on_echo)

    def _on_echo(self, env):
        if env.type_tag != ECHO_TAG:
            return
        _, send_time_us = _PROBE.unpack(env.payload)
        rtt_ms = (self.bus.clock.now_us() - send_time_us) / 1000.0
        self.rtts_ms.append(rtt_ms)

    def tick(self) -> None:
        now = self.bus.clock.now()
        while now >= self._next_send:
            payload = _PROBE.pack(self._sent, self.bus.clock.now_us())
            self.fwd.src.publish(payload, type_tag=PROBE_TAG)
            self._sent += 1
            self._next_send += self.interval_s

    @property
    def sent(self) -> int:
        return self._sent

    def stats(self, window_s: float) -> LatencyStats:
        return one_way_stats(self.rtts_ms, window_s)


def measure_latency(
    bus,
    fwd_conn_id: int,
    ret_conn_id: int,
    probes: int,
    window_s: float,
    install_echo: bool = True,
) -> LatencyStats:
    """Send ``probes`` spread over ``window_s`` and report one-way stats.

    Requires a SimClock bus (drives virtual time); live stacks use
    :class:`ProbeSession` directly.
    """
    fwd = bus.connection(fwd_conn_id)
    ret = bus.connection(ret_conn_id)
    if install_echo:
        EchoResponder(fwd.dst, ret.src)
    interval = window_s / probes
    session = ProbeSession(bus, fwd_conn_id, ret_conn_id, interval)
    for _ in range(probes):
        session.tick()
        bus.advance(interval)
    bus.advance(0.25)  # grace for stragglers
    return session.stats(window_s)
