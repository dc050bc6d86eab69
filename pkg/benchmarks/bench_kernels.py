"""Compare the compiled and pure-python kernel backends.

    python3 benchmarks/bench_kernels.py [--steps N]

Times a full episode on the shipped smoke scenario (repeated to ``--steps``)
and the KPI reductions on a random year-long trace, once per backend. The
compiled backend is warmed up before timing so JIT compilation is excluded.
"""

import argparse
import time

import numpy as np

from evgrid import kernels
from evgrid._accel import HAVE_NUMBA, pick
from evgrid.config import load_config
from evgrid.controllers import NoControlPolicy
from evgrid.env import EvChargingEnv, run_episode
from evgrid.kpi import compute_kpis
from evgrid.scenarios import smoke_scenario


def time_it(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_episode(use_numba, steps):
    cfg = load_config(smoke_scenario(), mode="NoControl")
    env = EvChargingEnv(cfg, use_numba=use_numba)
    policy = NoControlPolicy()
    run_episode(env, policy, steps=5)
    rounds = max(1, steps // cfg.horizon_steps)

    def go():
        for _ in range(rounds):
            run_episode(env, policy)

    return time_it(go, repeat=1), rounds * cfg.horizon_steps


def bench_kpis(use_numba, n=8760):
    rng = np.random.default_rng(0)
    e = rng.normal(5, 3, n)
    price = rng.uniform(0.05, 0.4, n)
    carbon = rng.uniform(0.1, 0.5, n)
    compute_kpis(e[:48], price[:48], carbon[:48], use_numba=use_numba)
    return time_it(lambda: compute_kpis(e, price, carbon, use_numba=use_numba), repeat=5)


def bench_charger_step(use_numba, n_chargers=64, calls=2000):
    fn = pick(kernels.charger_step, use_numba)
    rng = np.random.default_rng(1)
    n = n_chargers
    z = np.zeros
    args = dict(
        actions=rng.uniform(-1, 1, n), conn_ev=np.arange(n, dtype=np.int64), dt=1.0,
        p_ch=np.full(n, 7.4), p_dis=np.full(n, 7.4), eta_c=np.full(n, 0.95),
        ceff_x=z((n, 1)), ceff_y=z((n, 1)), ceff_n=z(n, dtype=np.int64),
        q=np.full(n, 30.0), cap0=np.full(n, 60.0), cap=np.full(n, 60.0), p_nom=np.full(n, 7.4),
        pc_x=z((n, 1)), pc_y=z((n, 1)), pc_n=z(n, dtype=np.int64), eta_rt=np.full(n, 0.9),
        theta=np.full(n, 1e-4), floor=np.full(n, 6.0), throughput=z(n), degr=z(n), min_cap=z(n),
    )
    outs = [z(n) for _ in range(6)]
    call = lambda: fn(*args.values(), *outs)  # noqa: E731
    call()

    def go():
        for _ in range(calls):
            call()

    return time_it(go, repeat=3), calls


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=3360)
    ns = ap.parse_args()
    backends = [False] + ([True] if HAVE_NUMBA else [])
    print(f"{'benchmark':<28}{'backend':<10}{'seconds':>10}{'per call (us)':>16}")
    for use in backends:
        name = "numba" if use else "python"
        secs, n = bench_episode(use, ns.steps)
        print(f"{'episode step':<28}{name:<10}{secs:>10.3f}{1e6 * secs / n:>16.1f}")
        secs, n = bench_charger_step(use)
        print(f"{'charger_step (64 EVs)':<28}{name:<10}{secs:>10.3f}{1e6 * secs / n:>16.1f}")
        secs = bench_kpis(use)
        print(f"{'kpis (8760 steps)':<28}{name:<10}{secs:>10.4f}{1e6 * secs:>16.1f}")
    if not HAVE_NUMBA:
        print("numba is not installed; only the python backend was timed")


if __name__ == "__main__":
    main()
