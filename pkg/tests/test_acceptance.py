"""Acceptance suite: one test per primary criterion, each printing a
[PASS]/[FAIL] line with the measured figure and its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s``. Everything here is
headless and uses virtual time except where wall-clock runtime itself is the
gate.
"""

import time

import numpy as np
import pytest

from avatarkit.bus import Bus, Carrier, LinkProfile, SimClock, measure_latency
from avatarkit.config import load_config
from avatarkit.feedback import FramePacer, compute_finger_feedback
from avatarkit.locomotion import QpProblem, enumerate_qp_oracle, solve_qp
from avatarkit.lowlevel import MinJerkRef, min_jerk_eval
from avatarkit.model import build_icub3_model
from avatarkit.model.kinematics import chain_fk, chain_joint_indices
from avatarkit.retargeting import retarget_arm_orientations
from avatarkit.sim import AvatarStack, ScenarioRunner, load_scenario


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------


def test_latency_claim_genoa_venice_link():
    # Emulated fiber link: 8 ms one-way, 4 ms jitter, 0.1% loss, seeded.
    # One-way p95 (RTT/2) over a 60 s probe window must stay below 25 ms.
    wall0 = time.perf_counter()
    bus = Bus(SimClock())
    bus.register_port("/op/out", "output")
    bus.register_port("/av/in", "input")
    bus.register_port("/av/out", "output")
    bus.register_port("/op/in", "input")
    fwd = bus.connect("/op/out", "/av/in", Carrier.DATAGRAM)
    ret = bus.connect("/av/out", "/op/in", Carrier.DATAGRAM)
    bus.set_link_profile_pair(fwd, ret, LinkProfile(8.0, 4.0, 0.001, seed=20211108))
    stats = measure_latency(bus, fwd, ret, probes=1200, window_s=60.0)
    wall = time.perf_counter() - wall0
    ok = stats.p95_ms < 25.0 and wall < 120.0
    report(
        "latency claim",
        ok,
        f"p95={stats.p95_ms:.2f} ms (<25), mean={stats.mean_ms:.2f} ms, "
        f"{stats.samples} echoes, runtime {wall:.1f}s (<120)",
    )


def test_model_integrity():
    model = build_icub3_model()
    groups = dict(model.groups)
    ok = (
        model.dof == 54
        and groups
        == {
            "head": 4, "neck": 3, "left_arm": 7, "right_arm": 7, "left_hand": 9,
            "right_hand": 9, "torso": 3, "left_leg": 6, "right_leg": 6,
        }
        and abs(model.mass.legs_fraction - 0.45) < 1e-12
        and abs(model.mass.arms_fraction - 0.20) < 1e-12
        and abs(model.mass.torso_head_fraction - 0.35) < 1e-12
        and abs(
            model.mass.legs_fraction + model.mass.arms_fraction + model.mass.torso_head_fraction
            - 1.0
        )
        < 1e-12
        and len(model.sensors.ft_sensors) == 6
        and model.geometry.foot_length_m == 0.25
        and model.geometry.foot_width_m == 0.10
    )
    report("model integrity", ok, "54 DoF breakdown, 0.45/0.20/0.35 masses, 6 F/T, 0.25x0.10 foot")


def test_qp_vs_oracle_1000():
    wall0 = time.perf_counter()
    rng = np.random.default_rng(1234)
    worst_obj = 0.0
    worst_kkt = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        m_in = int(rng.integers(0, 5))
        m_eq = int(rng.integers(0, min(3, n)))
        M = rng.normal(size=(n, n))
        H = M @ M.T + n * np.eye(n)
        g = rng.normal(size=n)
        x0 = rng.normal(size=n)
        A_eq = rng.normal(size=(m_eq, n))
        A_in = rng.normal(size=(m_in, n))
        p = QpProblem(H, g, A_eq, A_eq @ x0, A_in, A_in @ x0 + rng.uniform(0.1, 1.0, m_in))
        sol = solve_qp(p)
        oracle = enumerate_qp_oracle(p)
        worst_obj = max(worst_obj, abs(sol.objective - oracle.objective))
        worst_kkt = max(worst_kkt, sol.kkt_residual(p))
    wall = time.perf_counter() - wall0
    ok = worst_obj < 1e-6 and worst_kkt <= 1e-8 and wall < 60.0
    report(
        "QP vs oracle",
        ok,
        f"1000 problems: max objective gap {worst_obj:.2e} (<1e-6), "
        f"max KKT residual {worst_kkt:.2e} (<=1e-8), runtime {wall:.1f}s (<60)",
    )


def test_min_jerk_criterion():
    wall0 = time.perf_counter()
    ref = MinJerkRef(0.0, 1.0, T=1.0, t0=0.0)
    p0, v0, a0 = min_jerk_eval(ref, 0.0)
    pf, vf, af = min_jerk_eval(ref, 1.0)
    boundaries = (p0, v0, a0, pf, vf, af) == (0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    mid, _, _ = min_jerk_eval(ref, 0.5)
    # Independent oracle: 5-point central stencils on a 1 kHz sampling.
    h = 0.001
    t = np.arange(0.0, 1.0 + h / 2, h)
    pos, vel, acc = min_jerk_eval(ref, t)
    d1 = (pos[:-4] - 8 * pos[1:-3] + 8 * pos[3:-1] - pos[4:]) / (12 * h)
    d2 = (-pos[:-4] + 16 * pos[1:-3] - 30 * pos[2:-2] + 16 * pos[3:-1] - pos[4:]) / (12 * h * h)
    sl = slice(2, -2)
    vel_err = float(np.max(np.abs(vel[sl] - d1)))
    acc_err = float(np.max(np.abs(acc[sl] - d2)))
    wall = time.perf_counter() - wall0
    ok = boundaries and mid == 0.5 and vel_err < 1e-6 and acc_err < 1e-6 and wall < 10.0
    report(
        "min-jerk",
        ok,
        f"boundaries exact, midpoint {mid}, derivative-vs-FD errors "
        f"{vel_err:.1e}/{acc_err:.1e} (<1e-6), runtime {wall:.2f}s (<10)",
    )


def test_walking_stability_proxy():
    # 30 s simulated walk at 0.2 m/s: wrench-derived ZMP stays inside the
    # active support polygon with >= 5 mm margin at every 100 Hz tick.
    wall0 = time.perf_counter()
    stack = AvatarStack(load_config())
    stack.publish_walk(0.0, 0.2)
    min_margin = np.inf
    ticks = int(round(30.0 / stack.dt))
    for _ in range(ticks):
        stack.tick()
        margin = stack.executed_zmp_margin()
        if np.isfinite(margin):
            min_margin = min(min_margin, margin)
    wall = time.perf_counter() - wall0
    distance = stack.world.state.com[0]
    ok = min_margin >= 0.005 and not stack.fault_log and wall < 60.0
    report(
        "walking stability proxy",
        ok,
        f"30 s at 0.2 m/s: min executed-ZMP margin {min_margin*1000:.1f} mm (>=5), "
        f"faults {len(stack.fault_log)} (=0), distance {distance:.2f} m, runtime {wall:.1f}s (<60)",
    )


def test_command_blackout_mid_walk():
    stack = AvatarStack(load_config(), link_profile=LinkProfile(10.0, 0.0, 0.0, seed=9))
    stack.publish_walk(0.0, 0.2)
    stack.run(5.0)
    assert stack.pipeline.command.speed == pytest.approx(0.2)
    stack.blackout("/avatar/locomotion/cmd", 1.0)
    for k in range(300):  # 3 s of total loss; the operator keeps commanding
        if k % 10 == 0:
            stack.publish_walk(0.5, 0.1)
        stack.tick()
    held = stack.pipeline.command.speed == pytest.approx(0.2)
    stack.blackout("/avatar/locomotion/cmd", 0.0)
    stack.publish_walk(0.5, 0.1)  # lost commands are gone; send a fresh one
    stack.run(2.0)
    recovered = stack.pipeline.command.speed == pytest.approx(0.1)
    ok = held and recovered and not stack.fault_log
    report(
        "command blackout",
        ok,
        f"3 s total loss mid-walk: last command held ({held}), zero divergence, "
        f"recovery after blackout ({recovered}), faults {len(stack.fault_log)}",
    )


def test_retargeting_round_trip_500():
    wall0 = time.perf_counter()
    model = build_icub3_model()
    cfg = load_config().retargeting
    rng = np.random.default_rng(2718)
    worst = 0.0
    for k in range(500):
        side = "left" if k % 2 == 0 else "right"
        idx = chain_joint_indices(model, f"{side}_arm")
        lo = model.limits_low[idx]
        hi = model.limits_high[idx]
        q = model.zero_vector()
        qa = lo + rng.uniform(0.08, 0.92, 7) * (hi - lo)
        qa[4:] = 0.0  # wrist triplet: documented null space
        q[idx] = qa
        fk = chain_fk(model, f"{side}_arm", q, validate=False)
        res = retarget_arm_orientations(
            model, side, fk["upper_arm"][:3, :3], fk["forearm"][:3, :3], cfg
        )
        worst = max(worst, float(np.max(np.abs(res.joints[:4] - qa[:4]))))
    wall = time.perf_counter() - wall0
    ok = worst < 1e-3 and wall < 30.0
    report(
        "retargeting round trip",
        ok,
        f"500 postures: worst non-null-space joint error {worst:.2e} rad (<1e-3), "
        f"runtime {wall:.1f}s (<30)",
    )


def test_touch_path_1000():
    # SkinEvents injected at the simulator under a 10 ms link must produce a
    # HapticCommand operator-side within routing 10 + 2x10 link + 20 = 50 ms.
    cfg = load_config()
    stack = AvatarStack(cfg, link_profile=LinkProfile(10.0, 0.0, 0.0, seed=4))
    stack.run(0.5)
    budget_s = (cfg.feedback.routing_budget_ms + 2 * 10.0 + 20.0) / 1000.0
    latencies = []
    injected = 0
    patches = ("left_upper_arm", "right_upper_arm", "left_hand", "right_hand")
    while injected < 1000:
        t_inject = stack.clock.now()
        base = len(stack.haptic_log)
        stack.world.inject_touch(patches[injected % 4], (injected % 48,), 0.5 + (injected % 5) * 0.1)
        injected += 1
        for _ in range(int(budget_s / stack.dt) + 2):
            stack.tick()
            if len(stack.haptic_log) > base:
                break
        if len(stack.haptic_log) > base:
            latencies.append(stack.haptic_log[-1][0] - t_inject)
    within = sum(1 for d in latencies if d <= budget_s)
    fraction = within / 1000.0
    ok = fraction >= 0.99
    report(
        "touch path",
        ok,
        f"1000 injected touches under 10 ms link: {within}/1000 within "
        f"{budget_s*1000:.0f} ms budget ({fraction:.1%} >= 99%), "
        f"worst {max(latencies)*1000:.1f} ms",
    )


def test_finger_feedback_clipping():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(2000):
        forces = rng.uniform(0.0, 200.0, 5)
        fb = compute_finger_feedback(forces)
        worst = max(worst, float(np.max(fb.brake_force_n)))
    ok = worst <= 20.0
    report("finger feedback clipping", ok, f"2000 random force sets: max brake {worst:.1f} N (<=20)")


def test_frame_pacing_60fps_source():
    pacer = FramePacer(15.0)
    from avatarkit.feedback import FrameDescriptor

    delivered = 0
    for k in range(600):  # 10 s at 60 fps
        frame = FrameDescriptor(k / 60.0, (0, 0, 1.2), (1, 0, 0, 0))
        out = pacer.offer(frame, now=k / 60.0)
        if out is not None:
            delivered += 1
            assert out.resolution == (1024, 768)
    ok = abs(delivered - 150) <= 2
    report("frame pacing", ok, f"60 fps source for 10 s -> {delivered} frames (150 +/- 2) at 1024x768")


def test_scenario_venice():
    wall0 = time.perf_counter()
    from importlib import resources

    stack = AvatarStack(load_config())
    path = resources.files("avatarkit").joinpath("data/scenarios/venice.scn")
    events = load_scenario(str(path))
    runner = ScenarioRunner(stack)
    rep = runner.run(events)
    wall = time.perf_counter() - wall0
    ok = rep.all_passed and not rep.fault_events and wall < 180.0
    failed = [f"{e.kind}@{e.t}" for e, o, _ in rep.events if o != "pass"]
    report(
        "scenario venice",
        ok,
        f"{len(rep.events)} checkpoints all pass ({failed or 'none failed'}), "
        f"faults {len(rep.fault_events)} (=0), min margin {rep.min_zmp_margin*1000:.0f} mm, "
        f"runtime {wall:.1f}s (<180)",
    )
