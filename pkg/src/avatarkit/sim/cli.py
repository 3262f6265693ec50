"""Command-line entry points: avatar-sim, operator-side, bus-probe."""

from __future__ import annotations

import argparse
import signal
import sys
import time
from pathlib import Path

import numpy as np

from ..bus import LinkProfile, WallClock, measure_latency
from ..config import load_config
from .scenario import ScenarioRunner, load_scenario
from .stack import AvatarStack, LiveRunner


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config overlay", default=None)
    parser.add_argument("--seed", type=int, default=None, help="impairment RNG seed")


def _make_recorder(stack: AvatarStack, record_dir: Path):
    record_dir.mkdir(parents=True, exist_ok=True)
    diag_lines: list[str] = []
    stack.ports["/operator/diag"].subscribe(lambda env: diag_lines.append(env.payload.decode()))
    stack.record_q_ref = True

    def finish(report_text: str | None) -> None:
        (record_dir / "diag.txt").write_text("\n".join(diag_lines) + "\n" if diag_lines else "")
        if stack.q_ref_trace:
            np.save(record_dir / "qref.npy", np.array(stack.q_ref_trace))
        if report_text is not None:
            (record_dir / "report.txt").write_text(report_text)

    return finish


def _serve_live(stack_args, gateway_port: int, ws_port: int | None) -> int:
    from ..gateway import GatewayServer, WsBridge

    cfg, seed, profile = stack_args
    stack = AvatarStack(cfg, clock=WallClock(), seed=seed, link_profile=profile)
    gateway = GatewayServer(stack, gateway_port)
    stack.on_tick.append(gateway.maybe_broadcast)
    bridge = WsBridge("127.0.0.1", gateway_port, ws_port) if ws_port else None
    runner = LiveRunner(stack).start()
    print(f"gateway listening on tcp://127.0.0.1:{gateway_port}" + (f" ws://127.0.0.1:{ws_port}" if ws_port else ""))
    print("running live; Ctrl-C to stop")
    stop = []
    signal.signal(signal.SIGINT, lambda *_: stop.append(1))
    signal.signal(signal.SIGTERM, lambda *_: stop.append(1))
    try:
        while not stop:
            time.sleep(0.2)
    finally:
        runner.stop()
        gateway.close()
        if bridge:
            bridge.close()
        stack.bus.stop()
    return 0


def avatar_sim_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="avatar-sim",
        description="Simulated avatar stack: scenario runs (virtual time) or live gateway mode.",
    )
    _add_common(parser)
    parser.add_argument("--scenario", help="scenario file to execute headless")
    parser.add_argument("--duration", type=float, default=10.0, help="plain run length (s)")
    parser.add_argument("--record", help="directory for diag/report/reference traces")
    parser.add_argument("--gateway", type=int, help="serve the console gateway on this port (live mode)")
    parser.add_argument("--ws", type=int, help="also serve a WebSocket bridge on this port")
    parser.add_argument("--delay", type=float, default=None, help="link one-way delay ms")
    parser.add_argument("--jitter", type=float, default=0.0)
    parser.add_argument("--loss", type=float, default=0.0)
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    profile = None
    if args.delay is not None:
        profile = LinkProfile(args.delay, args.jitter, args.loss, seed=args.seed or cfg.simulator.seed)

    if args.gateway:
        return _serve_live((cfg, args.seed, profile), args.gateway, args.ws)

    stack = AvatarStack(cfg, seed=args.seed, link_profile=profile)
    finish = _make_recorder(stack, Path(args.record)) if args.record else None
    if args.scenario:
        events = load_scenario(args.scenario)
        report = ScenarioRunner(stack).run(events)
        text = report.to_text()
        print(text, end="")
        if finish:
            finish(text)
        return 0 if report.all_passed else 1
    stack.run(args.duration)
    print(
        f"ran {args.duration}s: faults={len(stack.fault_log)} "
        f"min_zmp_margin={stack.min_zmp_margin:.4f} relay_envelopes={stack.relay.envelope_count}"
    )
    if finish:
        finish(None)
    return 0


def operator_side_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="operator-side",
        description="Operator-side entry: replay a recorded session or serve the live console gateway.",
    )
    _add_common(parser)
    parser.add_argument("--replay", help="operator session file to feed through retargeting")
    parser.add_argument("--gateway", type=int, help="serve the console gateway on this port")
    parser.add_argument("--ws", type=int, help="WebSocket bridge port")
    parser.add_argument("--record", help="record directory")
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    if args.gateway:
        return _serve_live((cfg, args.seed, None), args.gateway, args.ws)
    if not args.replay:
        parser.error("need --replay or --gateway")

    stack = AvatarStack(cfg, seed=args.seed)
    finish = _make_recorder(stack, Path(args.record)) if args.record else None
    runner = ScenarioRunner(stack)
    from .scenario import ScenarioEvent

    report = runner.run([ScenarioEvent(0.0, "replay", (args.replay,))])
    print(report.to_text(), end="")
    if finish:
        finish(report.to_text())
    return 0 if report.all_passed else 1


def bus_probe_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bus-probe",
        description="Measure one-way latency (RTT/2) over an impaired duplex link.",
    )
    parser.add_argument("--conn", default=None, help="connection id to probe in a fresh stack (default: probe pair)")
    parser.add_argument("--probes", type=int, default=600)
    parser.add_argument("--window", type=float, default=30.0, help="probe window (s, virtual)")
    parser.add_argument("--delay", type=float, default=8.0, help="one-way delay ms")
    parser.add_argument("--jitter", type=float, default=4.0)
    parser.add_argument("--loss", type=float, default=0.001)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    cfg = load_config()
    profile = LinkProfile(args.delay, args.jitter, args.loss, seed=args.seed)
    stack = AvatarStack(cfg, seed=args.seed, link_profile=profile)
    fwd = int(args.conn) if args.conn else stack.conns["probe_fwd"]
    ret = stack.conns["probe_ret"]
    stats = measure_latency(stack.bus, fwd, ret, probes=args.probes, window_s=args.window, install_echo=False)
    print(
        f"samples={stats.samples} mean={stats.mean_ms:.3f}ms p95={stats.p95_ms:.3f}ms "
        f"max={stats.max_ms:.3f}ms window={stats.window_s}s"
    )
    alarm = stats.p95_ms > cfg.feedback.latency_alarm_ms
    print(f"alarm(>{cfg.feedback.latency_alarm_ms}ms): {alarm}")
    return 2 if alarm else 0


if __name__ == "__main__":
    sys.exit(avatar_sim_main())
