"""Compare the compiled and pure-Python EM/SPP kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from ldlsd import _kernels
from ldlsd.em_spp import EmConfig, compute_spp


def _cases(rng):
    y = np.ascontiguousarray(rng.gamma(2.0, 1.0, 100) + 1e-6)
    tail = np.ascontiguousarray(rng.gamma(2.0, 1.0, 200) + 1e-6)
    theta = np.array([0.6, 0.4, 0.8, 2.5, 0.4, 1.2, 0.0, 2.0])
    return y, tail, theta


def bench(impl, repeat):
    y, tail, theta = _cases(np.random.default_rng(0))
    out = np.empty(tail.size)

    def online():
        impl.online_pass(tail, theta.copy(), 0.92, 1e-6, out)

    cases = {
        "em_step (100 frames)": lambda: impl.em_step(y, theta, 1e-6),
        "loglik (100 frames)": lambda: impl.loglik(y, theta),
        "online_pass (200 frames)": online,
    }
    return {name: min(timeit.repeat(fn, number=50, repeat=repeat)) / 50 for name, fn in cases.items()}


def bench_spp(repeat):
    mag = np.random.default_rng(1).rayleigh(1.0, (129, 300))
    return min(timeit.repeat(lambda: compute_spp(mag, EmConfig()), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    py = _kernels.get_backend("python")
    try:
        cy = _kernels.get_backend("cython")
    except ImportError:
        cy = None
    rows = bench(py, args.repeat)
    crow = bench(cy, args.repeat) if cy is not None else {}
    print(f"{'kernel':28s} {'python [us]':>12s} {'cython [us]':>12s} {'speedup':>8s}")
    for name, t in rows.items():
        if name in crow:
            print(f"{name:28s} {t * 1e6:12.1f} {crow[name] * 1e6:12.1f} {t / crow[name]:8.1f}")
        else:
            print(f"{name:28s} {t * 1e6:12.1f} {'n/a':>12s}")
    print(f"compute_spp 129x300 with active backend ({_kernels.BACKEND}): {bench_spp(1):.2f} s")


if __name__ == "__main__":
    main()
