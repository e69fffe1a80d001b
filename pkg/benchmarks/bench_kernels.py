#!/usr/bin/env python3
"""Benchmark the compiled epoch kernels against the pure-numpy fallback.

Times the three hot kernels in isolation and a full buffered trial with each
backend, then prints a comparison table.  Run from the repository root:

    python3 benchmarks/bench_kernels.py [--packets 4]
"""

import argparse
import time

import numpy as np

from dstcsim import kernels
from dstcsim.config import SimConfig
from dstcsim.engine import woodbury_link_stats
from dstcsim.protocol import run_trial
from dstcsim.signal_model import generate_spreading_codes


def _kernel_inputs(rng, n_users=3, gain=16, sigma2=0.25):
    codes = generate_spreading_codes(n_users, gain, rng)
    code_matrix = np.ascontiguousarray(codes.T)
    coeff = rng.standard_normal((2, n_users)) + 1j * rng.standard_normal((2, n_users))
    symbols = (2.0 * rng.integers(0, 2, (n_users, 2)) - 1.0).astype(np.float64)
    noise = np.sqrt(sigma2 / 2) * (
        rng.standard_normal((2, gain, 2)) + 1j * rng.standard_normal((2, gain, 2))
    )
    gram = codes @ codes.T
    _, combine = woodbury_link_stats(np.abs(coeff) ** 2, gram, sigma2)
    return code_matrix, coeff, symbols, noise, np.ascontiguousarray(combine)


def _time_call(fn, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    code, coeff, symbols, noise, combine = _kernel_inputs(rng)
    cases = {
        "rx_rake": lambda b: lambda: b.rx_rake(code, coeff[0], coeff[1], symbols, noise),
        "rx_mmse": lambda b: lambda: b.rx_mmse(
            code, coeff[0], coeff[1], combine[0], combine[1], symbols, noise
        ),
        "tx_rake": lambda b: lambda: b.tx_rake(code, coeff[0], coeff[1], symbols, noise[0]),
    }
    rows = []
    for name, make in cases.items():
        timings = {}
        for backend in kernels.available_backends():
            timings[backend] = _time_call(make(kernels._BACKENDS[backend]), repeats)
        rows.append((name, timings))
    return rows


def bench_trial(packets):
    cfg = SimConfig(users=3, relays=6, gain=16, symbols=1000, packets=packets,
                    scheme="buffered", policy="exhaustive", capacity=6,
                    detector_relay="mmse", detector_dest="rake", seed=42)
    timings = {}
    checks = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        run_trial(cfg, 0, snr_db=8.0, collect_metrics=False)  # warm-up
        start = time.perf_counter()
        errors = 0
        for packet in range(packets):
            errors += run_trial(cfg, packet, snr_db=8.0, collect_metrics=False).bit_errors
        timings[backend] = (time.perf_counter() - start) / packets
        checks[backend] = errors
    kernels.set_backend("compiled" if "compiled" in kernels.available_backends() else "python")
    assert len(set(checks.values())) == 1, f"backends disagree: {checks}"
    return timings


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20000, help="kernel call repetitions")
    parser.add_argument("--packets", type=int, default=6, help="trials per backend")
    args = parser.parse_args()

    print(f"backends available: {', '.join(kernels.available_backends())}")
    print(f"\n{'kernel':<10}" + "".join(f"{b:>14}" for b in kernels.available_backends()) + f"{'speedup':>10}")
    for name, timings in bench_kernels(args.repeats):
        row = f"{name:<10}"
        for backend in kernels.available_backends():
            row += f"{timings[backend] * 1e6:>12.2f}us"
        if "compiled" in timings:
            row += f"{timings['python'] / timings['compiled']:>9.1f}x"
        print(row)

    print("\nfull buffered trial (3 users, 6 relays, 1000 symbols, MMSE relays):")
    timings = bench_trial(args.packets)
    for backend, seconds in timings.items():
        print(f"  {backend:<10} {seconds * 1e3:8.1f} ms/trial")
    if "compiled" in timings:
        print(f"  end-to-end speedup: {timings['python'] / timings['compiled']:.2f}x")


if __name__ == "__main__":
    main()
