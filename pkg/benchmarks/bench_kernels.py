#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Covers the three hot paths (1 kHz servo ticks, min-jerk batches, LIPM/DCM
rollouts) plus an end-to-end simulated walk. Run:

    python3 benchmarks/bench_kernels.py [--walk-seconds 10]
"""

import argparse
import time

import numpy as np

from avatarkit._kernels import pure

try:
    from avatarkit._kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_servo(impl, n_joints=54, n_ticks=10000):
    rng = np.random.default_rng(1)
    arrays = dict(
        mode=rng.integers(0, 6, n_joints).astype(np.int8),
        setpoint=rng.normal(size=n_joints),
        integrator=np.zeros(n_joints),
        prev_meas=np.zeros(n_joints),
        mj_q0=np.zeros(n_joints),
        mj_qf=np.ones(n_joints),
        mj_T=np.ones(n_joints),
        mj_t0=np.zeros(n_joints),
        ref=rng.normal(size=n_joints),
        meas_pos=rng.normal(size=n_joints),
        meas_vel=rng.normal(size=n_joints),
        meas_torque=rng.normal(size=n_joints),
        meas_current=rng.normal(size=n_joints),
        kp=np.full(n_joints, 20.0),
        ki=np.full(n_joints, 2.0),
        kd=np.full(n_joints, 0.05),
        out_lim=np.full(n_joints, 100.0),
        int_lim=np.full(n_joints, 10.0),
        fc=np.full(n_joints, 0.3),
        fv=np.full(n_joints, 0.1),
    )
    cmd = np.zeros(n_joints)
    sat = np.zeros(n_joints, dtype=np.uint8)
    trace = np.zeros((n_ticks, n_joints))

    def run():
        impl.servo_tick_batch(
            arrays["mode"], arrays["setpoint"], arrays["integrator"], arrays["prev_meas"],
            arrays["mj_q0"], arrays["mj_qf"], arrays["mj_T"], arrays["mj_t0"], arrays["ref"],
            arrays["meas_pos"], arrays["meas_vel"], arrays["meas_torque"], arrays["meas_current"],
            arrays["kp"], arrays["ki"], arrays["kd"], arrays["out_lim"], arrays["int_lim"],
            arrays["fc"], arrays["fv"], 0.0, 0.001, n_ticks, cmd, sat, trace,
        )

    return timeit(run, repeats=3), n_ticks * n_joints


def bench_minjerk(impl, n=200000):
    rng = np.random.default_rng(2)
    q0 = rng.normal(size=n)
    qf = rng.normal(size=n)
    T = rng.uniform(0.1, 2.0, n)
    t0 = np.zeros(n)
    t = rng.uniform(0, 2.5, n)
    pos = np.empty(n)
    vel = np.empty(n)
    acc = np.empty(n)
    return timeit(lambda: impl.minjerk_batch(q0, qf, T, t0, t, pos, vel, acc)), n


def bench_lipm(impl, n=100000):
    rng = np.random.default_rng(3)
    p = rng.normal(size=n) * 0.1
    omega = 4.22
    a = float(np.exp(omega * 0.01))
    b = 1.0 / a
    s = float(np.sinh(omega * 0.01))
    dcm = np.zeros(n + 1)
    com = np.zeros(n + 1)
    vel = np.zeros(n + 1)

    def run():
        impl.dcm_backward(p, 0.1, a, dcm)
        impl.lipm_com_rollout(dcm, p, 0.0, b, s, omega, com, vel)

    return timeit(run), 2 * n


def bench_walk(backend_env, seconds):
    import os
    import subprocess
    import sys

    env = dict(os.environ)
    env["AVATARKIT_PURE"] = backend_env
    code = (
        "import time\n"
        "from avatarkit.config import load_config\n"
        "from avatarkit.sim import AvatarStack\n"
        "import avatarkit\n"
        "stack = AvatarStack(load_config())\n"
        "stack.publish_walk(0.0, 0.2)\n"
        "t0 = time.perf_counter()\n"
        f"stack.run({seconds})\n"
        "wall = time.perf_counter() - t0\n"
        f"print(f'{{avatarkit.KERNEL_BACKEND}} {{wall:.3f}} {{{seconds}/wall:.2f}}')\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    return out.stdout.strip()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--walk-seconds", type=float, default=10.0)
    args = parser.parse_args()

    rows = []
    for name, bench in (("servo 1kHz x54", bench_servo), ("min-jerk batch", bench_minjerk), ("LIPM rollout", bench_lipm)):
        t_pure, units = bench(pure)
        if _fast is not None:
            t_fast, _ = bench(_fast)
            rows.append((name, units, t_pure, t_fast, t_pure / t_fast))
        else:
            rows.append((name, units, t_pure, None, None))

    print(f"{'kernel':<18} {'ops':>10} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>8}")
    for name, units, tp, tf, sp in rows:
        tf_s = f"{tf:.4f}" if tf is not None else "n/a"
        sp_s = f"{sp:.1f}x" if sp is not None else "n/a"
        print(f"{name:<18} {units:>10} {tp:>10.4f} {tf_s:>13} {sp_s:>8}")

    print(f"\nend-to-end {args.walk_seconds:.0f} s simulated walk (wall s, real-time factor):")
    print("  pure:    ", bench_walk("1", args.walk_seconds))
    if _fast is not None:
        print("  compiled:", bench_walk("0", args.walk_seconds))


if __name__ == "__main__":
    main()
