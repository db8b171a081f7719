"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 1024 16384] [--repeat 5]

Also times a full TQM solve with each backend swapped in, since the kernels
are a small share of an FFT-dominated iteration.
"""
import argparse
import timeit

import numpy as np

from ofdmpn import kernels
from ofdmpn import signal_model as sm
from ofdmpn.estimators import MmConfig, run_mm
from ofdmpn.numerics import build_projector


def cases(n, rng):
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u = np.exp(2j * np.pi * rng.random(n))
    eps = rng.standard_normal(n)
    w = rng.random(n)
    return {
        "unimodular_update": lambda m: m.unimodular_update(a, u),
        "block_sum(n_s=32)": lambda m: m.block_sum(a, 32),
        "block_repeat(n_s=32)": lambda m: m.block_repeat(a[: n // 32], 32),
        "ar1_recursion": lambda m: m.ar1_recursion(eps, 0.999, 0.03),
        "separable_mm(50 it)": lambda m: m.separable_mm(a, w, u, 1e-300, 50),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def solve_case(n):
    rng = sm.trial_rng(0, 0)
    s = sm.gen_symbols(rng, n)
    h = sm.gen_channel(rng, sm.ChannelParams())
    theta = sm.gen_wiener_phase(rng, n, sm.WienerPhaseParams())
    blk = sm.transmit_receive(rng, s, h, theta, sm.snr_to_sigma(s, h, n, 35.0))
    b = build_projector(s, 10)
    return lambda: run_mm(MmConfig(max_iters=50), blk.y, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 16384])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = kernels.available_backends()
    names = sorted(backends)
    print(f"selected backend: {kernels.BACKEND}; available: {', '.join(names)}")
    print(f"{'kernel':24s} {'n':>7s} " + " ".join(f"{b + ' us':>12s}" for b in names) + "   speedup")
    for n in args.sizes:
        for label, fn in cases(n, np.random.default_rng(n)).items():
            t = {b: best_of(lambda: fn(backends[b]), args.repeat) for b in names}
            speed = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{label:24s} {n:7d} " + " ".join(f"{t[b] * 1e6:12.1f}" for b in names) + f"   {speed:6.2f}x")

        solve = solve_case(n)
        t = {}
        saved = {k: getattr(kernels, k) for k in ("unimodular_update", "block_sum", "block_repeat")}
        try:
            for b in names:
                for k in saved:
                    setattr(kernels, k, getattr(backends[b], k))
                t[b] = best_of(solve, args.repeat)
        finally:
            for k, v in saved.items():
                setattr(kernels, k, v)
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{'run_mm tqm (50 it)':24s} {n:7d} " + " ".join(f"{t[b] * 1e6:12.1f}" for b in names) + f"   {speed:6.2f}x")


if __name__ == "__main__":
    main()
