"""Bus transport: registry, wire format, carriers, impairment, tunnel,
latency measurement."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avatarkit.bus import (
    Bus,
    Carrier,
    DirectionMismatch,
    DuplicateName,
    Envelope,
    InsufficientProbes,
    LatencyStats,
    LinkProfile,
    MalformedName,
    RelayUnreachable,
    SimClock,
    SubnetIdCollision,
    TunnelConfig,
    UnknownConnection,
    UnknownPort,
    WireFormatError,
    add_relay,
    create_tunnel,
    decode,
    measure_latency,
    one_way_stats,
)
from avatarkit.bus.tunnel import RegistryService, format_query, parse_line


def make_bus():
    return Bus(SimClock(), default_subnet="local")


# -- registry ------------------------------------------------------------


def test_register_and_lookup():
    bus = make_bus()
    port = bus.register_port("/avatar/joints/state", "output")
    assert bus.lookup("/avatar/joints/state") == port.endpoint


def test_duplicate_name_rejected():
    bus = make_bus()
    bus.register_port("/a/b", "output")
    with pytest.raises(DuplicateName):
        bus.register_port("/a/b", "input")


@pytest.mark.parametrize("name", ["no-slash", "", "/", "/a//b", "/a b"])
def test_malformed_names_rejected(name):
    bus = make_bus()
    with pytest.raises(MalformedName):
        bus.register_port(name, "output")


def test_lookup_unregistered_fails():
    bus = make_bus()
    with pytest.raises(UnknownPort):
        bus.lookup("/nope")


# -- wire format -----------------------------------------------------------


def test_envelope_roundtrip():
    env = Envelope(7, 123456, "/x/y", "test-tag", b"payload bytes")
    decoded, end = decode(env.encode())
    assert decoded == env
    assert end == len(env.encode())


@given(
    seq=st.integers(0, 2**63),
    t=st.integers(0, 2**63),
    topic=st.text(alphabet=st.characters(codec="ascii", exclude_characters="\x00"), max_size=40),
    tag=st.text(alphabet=st.characters(codec="ascii", exclude_characters="\x00"), max_size=20),
    payload=st.binary(max_size=200),
)
@settings(max_examples=200, deadline=None)
def test_envelope_roundtrip_fuzz(seq, t, topic, tag, payload):
    env = Envelope(seq, t, topic, tag, payload)
    decoded, _ = decode(env.encode())
    assert decoded == env


@given(data=st.binary(max_size=64), cut=st.integers(0, 64))
@settings(max_examples=200, deadline=None)
def test_truncated_wire_raises(data, cut):
    env = Envelope(1, 2, "/t", "g", data)
    raw = env.encode()
    if cut >= len(raw):
        return
    with pytest.raises(WireFormatError):
        decode(raw[:cut])


# -- carriers & impairment ----------------------------------------------------


def wire_pair(bus, carrier, src="/src", dst="/dst"):
    out = bus.register_port(src, "output")
    inp = bus.register_port(dst, "input")
    conn = bus.connect(src, dst, carrier)
    return out, inp, conn


def test_inprocess_delivers_in_order():
    bus = make_bus()
    out, inp, _ = wire_pair(bus, Carrier.IN_PROCESS)
    for i in range(100):
        out.publish(bytes([i]), "b")
    bus.advance(0.001)
    got = [d.envelope.payload[0] for d in inp.drain()]
    assert got == list(range(100))


def test_reliable_never_reorders_under_jitter():
    bus = make_bus()
    out, inp, conn = wire_pair(bus, Carrier.RELIABLE)
    bus.set_link_profile(conn, LinkProfile(10.0, 9.0, 0.0, seed=3))
    for i in range(200):
        out.publish(i.to_bytes(2, "little"), "b")
        bus.advance(0.001)
    bus.advance(0.2)
    seqs = [d.envelope.seq for d in inp.drain()]
    assert seqs == sorted(seqs)
    assert len(seqs) == 200


def test_datagram_full_loss_delivers_nothing():
    bus = make_bus()
    out, inp, conn = wire_pair(bus, Carrier.DATAGRAM)
    bus.set_link_profile(conn, LinkProfile(1.0, 0.0, 1.0, seed=1))
    for _ in range(50):
        out.publish(b"x", "b")
    bus.advance(1.0)
    assert inp.drain() == []


def test_datagram_loss_is_seeded_and_bounded():
    # loss=0.5 over 10000 sends: binomial(10000, 0.5) stays within
    # +/- 3 sigma = +/- 150 of 5000; identical count on re-run with the seed.
    counts = []
    for _ in range(2):
        bus = make_bus()
        out, inp, conn = wire_pair(bus, Carrier.DATAGRAM)
        bus.set_link_profile(conn, LinkProfile(0.0, 0.0, 0.5, seed=77))
        for _ in range(10000):
            out.publish(b"x", "b")
        bus.advance(0.1)
        counts.append(len(inp.drain()))
    assert counts[0] == counts[1]
    assert 4700 <= counts[0] <= 5300


def test_profile_delay_applies():
    bus = make_bus()
    out, inp, conn = wire_pair(bus, Carrier.RELIABLE)
    bus.set_link_profile(conn, LinkProfile(10.0, 0.0, 0.0, seed=1))
    out.publish(b"x", "b")
    bus.advance(0.0099)
    assert inp.drain() == []
    bus.advance(0.0002)
    (d,) = inp.drain()
    assert d.arrived_at == pytest.approx(0.010, abs=1e-6)


def test_zero_profile_identical_to_none():
    for profile in (None, LinkProfile(0.0, 0.0, 0.0, seed=1)):
        bus = make_bus()
        out, inp, conn = wire_pair(bus, Carrier.RELIABLE)
        if profile:
            bus.set_link_profile(conn, profile)
        out.publish(b"x", "b")
        bus.advance(0.0)
        assert len(inp.drain()) == 1


def test_direction_mismatch():
    bus = make_bus()
    bus.register_port("/in1", "input")
    bus.register_port("/in2", "input")
    with pytest.raises(DirectionMismatch):
        bus.connect("/in1", "/in2", Carrier.IN_PROCESS)


def test_unknown_connection():
    bus = make_bus()
    with pytest.raises(UnknownConnection):
        bus.set_link_profile(99, LinkProfile())


# -- tunnel ---------------------------------------------------------------------


def tunneled_bus():
    bus = Bus(SimClock(), default_subnet="a")
    relay = add_relay(bus, "relay:1")
    create_tunnel(bus, TunnelConfig("relay:1", "a"), TunnelConfig("relay:1", "b"))
    return bus, relay


def test_cross_subnet_delivery_counts_relay_hops():
    bus, relay = tunneled_bus()
    out = bus.register_port("/out", "output", "a")
    inp = bus.register_port("/in", "input", "b")
    bus.connect("/out", "/in", Carrier.RELIABLE)
    for _ in range(5):
        out.publish(b"x", "b")
    bus.advance(0.01)
    assert len(inp.drain()) == 5
    assert relay.envelope_count == 5


def test_intra_subnet_does_not_touch_relay():
    bus, relay = tunneled_bus()
    out = bus.register_port("/out", "output", "a")
    inp = bus.register_port("/in", "input", "a")
    bus.connect("/out", "/in", Carrier.RELIABLE)
    out.publish(b"x", "b")
    bus.advance(0.01)
    assert len(inp.drain()) == 1
    assert relay.envelope_count == 0


def test_relay_down_raises_on_cross_connect():
    bus, relay = tunneled_bus()
    bus.register_port("/out", "output", "a")
    bus.register_port("/in", "input", "b")
    relay.up = False
    with pytest.raises(RelayUnreachable):
        bus.connect("/out", "/in", Carrier.RELIABLE)


def test_subnet_id_collision():
    bus = Bus(SimClock(), default_subnet="a")
    add_relay(bus, "relay:1")
    with pytest.raises(SubnetIdCollision):
        create_tunnel(bus, TunnelConfig("relay:1", "a"), TunnelConfig("relay:1", "a"))


def test_tunnel_transparency():
    # The same pub/sub test passes with ports co-located or split across the
    # tunnel; only latency may differ (none here).
    def run(split):
        if split:
            bus, _ = tunneled_bus()
            sub_out, sub_in = "a", "b"
        else:
            bus = Bus(SimClock(), default_subnet="a")
            sub_out = sub_in = "a"
        out = bus.register_port("/t/out", "output", sub_out)
        inp = bus.register_port("/t/in", "input", sub_in)
        bus.connect("/t/out", "/t/in", Carrier.RELIABLE)
        for i in range(20):
            out.publish(bytes([i]), "b")
        bus.advance(0.01)
        return [d.envelope.payload for d in inp.drain()]

    assert run(split=False) == run(split=True)


def test_registry_protocol_lines():
    assert parse_line("QRY /a/b") == ("QRY", "/a/b")
    assert parse_line("ACK bus://a#/x") == ("ACK", "bus://a#/x")
    bus, _ = tunneled_bus()
    bus.register_port("/svc", "output", "b")
    service = RegistryService(bus, "b")
    reply = service.handle_line(format_query("/svc"))
    assert reply.startswith("ACK ")
    assert service.handle_line("QRY /missing") == "ERR NOT_FOUND"
    assert service.handle_line("REG /ext bus://b#/ext") == "ACK bus://b#/ext"
    assert service.handle_line("REG /ext bus://b#/ext") == "ERR DUPLICATE"
    assert service.handle_line("REG bad-name e") == "ERR MALFORMED"
    assert service.handle_line("garbage line") == "ERR MALFORMED"


def test_registry_protocol_over_bus_connection():
    # Lines travel as envelopes end to end.
    bus = make_bus()
    req_in = bus.register_port("/registry/req", "input")
    rep_out = bus.register_port("/registry/rep", "output")
    rep_in = bus.register_port("/client/rep", "input")
    client_out = bus.register_port("/client/req", "output")
    bus.connect("/client/req", "/registry/req", Carrier.RELIABLE)
    bus.connect("/registry/rep", "/client/rep", Carrier.RELIABLE)
    bus.register_port("/known", "output")
    RegistryService(bus, "local").serve_port(req_in, rep_out)
    client_out.publish(format_query("/known").encode(), "registry-line")
    bus.advance(0.01)
    (reply,) = rep_in.drain()
    assert parse_line(reply.envelope.payload.decode())[0] == "ACK"


# -- latency ---------------------------------------------------------------------


def duplex(bus, profile=None):
    a_out = bus.register_port("/a/out", "output")
    b_in = bus.register_port("/b/in", "input")
    b_out = bus.register_port("/b/out", "output")
    a_in = bus.register_port("/a/in", "input")
    fwd = bus.connect("/a/out", "/b/in", Carrier.DATAGRAM)
    ret = bus.connect("/b/out", "/a/in", Carrier.DATAGRAM)
    if profile is not None:
        bus.set_link_profile_pair(fwd, ret, profile)
    return fwd, ret


def test_symmetric_links_give_one_way_mean():
    bus = make_bus()
    fwd, ret = duplex(bus, LinkProfile(10.0, 0.0, 0.0, seed=2))
    stats = measure_latency(bus, fwd, ret, probes=50, window_s=5.0)
    assert stats.mean_ms == pytest.approx(10.0, abs=2.0)
    assert stats.mean_ms <= stats.p95_ms <= stats.max_ms


def test_inprocess_loopback_under_1ms():
    bus = make_bus()
    a_out = bus.register_port("/a/out", "output")
    b_in = bus.register_port("/b/in", "input")
    b_out = bus.register_port("/b/out", "output")
    a_in = bus.register_port("/a/in", "input")
    fwd = bus.connect("/a/out", "/b/in", Carrier.IN_PROCESS)
    ret = bus.connect("/b/out", "/a/in", Carrier.IN_PROCESS)
    stats = measure_latency(bus, fwd, ret, probes=10, window_s=0.5)
    assert stats.mean_ms < 1.0


def test_insufficient_probes():
    bus = make_bus()
    fwd, ret = duplex(bus, LinkProfile(1.0, 0.0, 1.0, seed=2))  # all lost
    with pytest.raises(InsufficientProbes):
        measure_latency(bus, fwd, ret, probes=10, window_s=1.0)


def test_stats_invariant_enforced():
    with pytest.raises(ValueError):
        LatencyStats(3, mean_ms=10.0, p95_ms=5.0, max_ms=20.0, window_s=1.0)


@given(st.lists(st.floats(0.1, 500.0), min_size=3, max_size=400))
@settings(max_examples=100, deadline=None)
def test_one_way_stats_monotone(rtts):
    stats = one_way_stats(rtts, window_s=1.0)
    slack = 1e-12 * (1.0 + abs(stats.p95_ms))
    assert stats.mean_ms <= stats.p95_ms + slack <= stats.max_ms + 2 * slack
    assert stats.samples == len(rtts)


def test_joint_vector_wire_roundtrip():
    from avatarkit.sim.wire import pack_vector, unpack_vector

    q = np.linspace(-1.5, 1.5, 54)
    assert np.array_equal(unpack_vector(pack_vector(q)), q)


def test_wall_mode_per_port_dispatch():
    # WallClock bus: scheduler thread delivers; each input port runs its
    # callbacks on its own dispatcher thread.
    import threading
    import time as _time

    from avatarkit.bus import WallClock

    bus = Bus(WallClock())
    try:
        out = bus.register_port("/w/out", "output")
        inp = bus.register_port("/w/in", "input")
        bus.connect("/w/out", "/w/in", Carrier.RELIABLE)
        seen = []
        thread_names = set()

        def on_env(env):
            seen.append(env.seq)
            thread_names.add(threading.current_thread().name)

        inp.subscribe(on_env)
        for _ in range(20):
            out.publish(b"x", "b")
        deadline = _time.monotonic() + 2.0
        while len(seen) < 20 and _time.monotonic() < deadline:
            _time.sleep(0.005)
        assert seen == list(range(1, 21))  # in order, none lost
        assert any("dispatch" in name for name in thread_names)
    finally:
        bus.stop()
