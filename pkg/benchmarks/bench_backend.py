"""Benchmark the compiled kernels against the pure-numpy fallback.

Run: python benchmarks/bench_backend.py
"""

import time

import numpy as np

from aoakey import _kernels_py

try:
    from aoakey import _kernels
except ImportError:
    _kernels = None


def timeit(fn, args, reps=200):
    fn(*args)  # warm up
    best = np.inf
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def cases():
    rng = np.random.default_rng(0)
    elem = 2 * np.pi * np.arange(1, 18) / 17
    az_scan = rng.uniform(0, 2 * np.pi, 360)
    el_scan = np.full(360, np.pi / 2)
    az_joint = rng.uniform(0, 2 * np.pi, 1200)
    el_joint = rng.uniform(0.1, np.pi / 2, 1200)
    basis = rng.standard_normal((15, 16)) + 1j * rng.standard_normal((15, 16))
    steer16 = rng.standard_normal((16, 360)) + 1j * rng.standard_normal((16, 360))
    adj = rng.standard_normal(17) + 1j * rng.standard_normal(17)
    steer17 = rng.standard_normal((17, 360)) + 1j * rng.standard_normal((17, 360))
    values = rng.uniform(0, 1, 100_000)
    levels = rng.integers(0, 128, 100_000)
    return [
        ("steering_matrix 17x360", "steering_matrix", (8.5, elem, az_scan, el_scan)),
        ("steering_matrix 17x1200", "steering_matrix", (8.5, elem, az_joint, el_joint)),
        ("music_power 15x16x360", "music_power", (basis, steer16, 1.0)),
        ("xsbs_power 17x360", "xsbs_power", (adj, steer17)),
        ("quantize_levels 1e5", "quantize_levels", (values, 0.0, 1.0, 7)),
        ("gray_encode 1e5 x8", "gray_encode", (levels, 7, 2)),
    ]


def main():
    if _kernels is None:
        print("compiled kernels unavailable; benchmarking the pure backend only")
    print(f"{'kernel':<26} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for label, name, args in cases():
        pure = timeit(getattr(_kernels_py, name), args)
        if _kernels is not None:
            comp = timeit(getattr(_kernels, name), args)
            print(f"{label:<26} {pure * 1e6:>8.1f}us {comp * 1e6:>8.1f}us "
                  f"{pure / comp:>7.2f}x")
        else:
            print(f"{label:<26} {pure * 1e6:>8.1f}us {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
