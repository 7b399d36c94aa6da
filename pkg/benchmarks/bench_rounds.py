#!/usr/bin/env python3
"""Compare the compiled round kernel against the pure-Python fallback.

Two views: raw kernel throughput on the hot per-round update, and an
end-to-end 4-state serial key recovery with the bank session forced onto
each backend. Run: python benchmarks/bench_rounds.py
"""

import math
import time

import numpy as np

import wiesnerlab.bank
from wiesnerlab import qcore
from wiesnerlab._rounds import BACKEND, get_backend
from wiesnerlab.bank import Bank
from wiesnerlab.bt_attack import bt_recover_key_serial


def bench_kernel(impl, n_rounds, calls):
    e_pass, _ = qcore.postselected_probe_maps(
        qcore.controlled(qcore.SIGMA_X), qcore.KET0)
    m_pass = e_pass @ qcore.rotation(math.pi / (2 * n_rounds)).as_array()
    probe = qcore.KET0.as_array()
    rng = np.random.default_rng(0)
    blocks = [rng.random(n_rounds) for _ in range(calls)]
    t0 = time.perf_counter()
    survived = 0
    for u in blocks:
        caught, _ = impl.sample_transfer_rounds(m_pass, probe, n_rounds, u)
        survived += caught == 0
    dt = time.perf_counter() - t0
    return dt, calls * n_rounds / dt, survived


def bench_attack(impl, trials):
    saved = wiesnerlab.bank.sample_transfer_rounds
    wiesnerlab.bank.sample_transfer_rounds = impl.sample_transfer_rounds
    try:
        rng = np.random.default_rng(1)
        t0 = time.perf_counter()
        ok = 0
        for _ in range(trials):
            bank = Bank()
            oracle = bank.oracle_for(bank.issue(16, rng))
            res = bt_recover_key_serial(oracle, 0.1, rng)
            ok += not res.caught
        dt = time.perf_counter() - t0
        return dt, ok
    finally:
        wiesnerlab.bank.sample_transfer_rounds = saved


def main():
    print(f"default backend: {BACKEND}")
    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name}: not available")
    rows = []
    for name, impl in backends.items():
        dt, rps, survived = bench_kernel(impl, n_rounds=790, calls=2000)
        rows.append((name, "kernel 2000x790 rounds", dt, f"{rps / 1e6:.1f} M rounds/s"))
    for name, impl in backends.items():
        dt, ok = bench_attack(impl, trials=50)
        rows.append((name, "serial recovery n=16 x50", dt, f"{ok}/50 uncaught"))
    width = max(len(r[1]) for r in rows)
    print(f"{'backend':<8} {'workload':<{width}} {'time':>9}  detail")
    for name, label, dt, detail in rows:
        print(f"{name:<8} {label:<{width}} {dt:>8.3f}s  {detail}")
    if len(backends) == 2:
        for label in {r[1] for r in rows}:
            times = {r[0]: r[2] for r in rows if r[1] == label}
            print(f"speedup ({label}): {times['python'] / times['cython']:.1f}x")


if __name__ == "__main__":
    main()
