"""Exact batched forward pass: compiled kernel vs numpy fallback vs Python integers.

Usage: python3 benchmarks/bench_forward.py [--n 20000] [--repeat 5]

All three paths must produce identical outputs; the script checks that
before reporting timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from relucc.batch import backend, forward_scaled
from relucc.circuit import compile_to_relu, random_circuit
from relucc.gadgets import bit_extractor_shallow, boolean_gadget, sawtooth


def cases(rng, n):
    yield "IP_32 (Boolean)", boolean_gadget("IP", 32), rng.integers(0, 2, (n, 64), dtype=np.int64), 1
    yield "DISJ_64 (Boolean)", boolean_gadget("DISJ", 64), rng.integers(0, 2, (n, 128), dtype=np.int64), 1
    yield "sawtooth(10)", sawtooth(10), rng.integers(0, 1 << 20, (n, 1), dtype=np.int64), 1 << 20
    yield "extractor c=8 d=4", bit_extractor_shallow(8, None, 4), rng.integers(0, 1 << 20, (n, 4), dtype=np.int64), 1 << 20
    tc = random_circuit(np.random.default_rng(0), 10, max_gates=20)
    yield "compiled circuit d=10", compile_to_relu(tc), rng.integers(0, 2, (n, 10), dtype=np.int64), 1


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def same(a, b):
    return a.den == b.den and (np.asarray(a.num, dtype=object) == np.asarray(b.num, dtype=object)).all()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(1)
    print(f"backend: {backend()}  batch: {args.n} rows  best of {args.repeat}")
    print(f"{'network':<24}{'kernel ms':>11}{'numpy ms':>11}{'pyint ms':>11}{'numpy/kernel':>14}")
    for name, net, X, den in cases(rng, args.n):
        tk, ok = best_of(lambda: forward_scaled(net, X, den), args.repeat)
        tn, on = best_of(lambda: forward_scaled(net, X, den, use_kernel=False), args.repeat)
        tp, op = best_of(lambda: forward_scaled(net, X, den, force_exact_ints=True), max(1, args.repeat // 2))
        if not (same(ok, on) and same(ok, op)):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<24}{tk * 1e3:>11.2f}{tn * 1e3:>11.2f}{tp * 1e3:>11.2f}{tn / tk:>14.2f}")


if __name__ == "__main__":
    main()
