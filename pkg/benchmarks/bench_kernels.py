"""Time the numba kernels against the pure-numpy fallback.

Run from the repository root::

    python benchmarks/bench_kernels.py            # kernel timings
    python benchmarks/bench_kernels.py --scan     # plus the three-curve CLI scan per backend

Each kernel is called once before timing so JIT compilation is excluded.
Both backends are checked to agree before their timings are reported.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from kdiffract._kernels import numba_impl, numpy_impl
from kdiffract.diffraction import _cut


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    orders = np.arange(60)
    x = np.linspace(0.0, 40.0, 20_000)
    yield "bessel_orders 60x20000", (orders, x)

    n_max, half_band, eps = 107, 2, 10.0
    coef_re = rng.standard_normal((2 * n_max + 1, 2 * half_band + 1))
    coef_im = rng.standard_normal((2 * n_max + 1, 2 * half_band + 1))
    p = np.arange(-44_000, 44_001) * 0.005
    yield "comb_sum n_max=107, 88001 points", (p, eps, -n_max, coef_re, coef_im, half_band,
                                               _cut(eps))

    u = np.array([0.5, 1.0, 2.5, 3.0])
    v = np.array([1.0, 1.0, 1.0])
    yield "pfq_series 4F3 z=-0.81", (u, v, -0.81, 1e-16, 100_000)


def run_scan(backend):
    env = dict(os.environ)
    env["KDIFFRACT_DISABLE_NUMBA"] = "1" if backend == "numpy" else "0"
    cmd = [sys.executable, "-m", "kdiffract", "--mode", "averaged", "--T", "10",
           "--epsilon", "10", "--calT", "0,1,10", "--method", "quadrature", "-o", os.devnull]
    start = time.perf_counter()
    subprocess.run(cmd, env=env, check=True)
    return time.perf_counter() - start


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scan", action="store_true", help="also time the CLI scan per backend")
    args = ap.parse_args(argv)

    if numba_impl is None:
        print("numba backend unavailable (KDIFFRACT_DISABLE_NUMBA set or numba missing)")
        return 1

    print(f"{'kernel':40s} {'numpy [s]':>11s} {'numba [s]':>11s} {'speedup':>8s}")
    for label, call_args in cases():
        name = label.split()[0]
        fast, slow = getattr(numba_impl, name), getattr(numpy_impl, name)
        a, b = np.asarray(fast(*call_args), float), np.asarray(slow(*call_args), float)
        if not np.allclose(a, b, rtol=1e-12, atol=1e-14):
            raise SystemExit(f"{name}: backends disagree")
        t_fast = best_of(lambda: fast(*call_args), args.repeat)
        t_slow = best_of(lambda: slow(*call_args), args.repeat)
        print(f"{label:40s} {t_slow:11.4f} {t_fast:11.4f} {t_slow / t_fast:8.1f}")

    if args.scan:
        for backend in ("numba", "numpy"):
            print(f"CLI three-curve scan, {backend}: {run_scan(backend):.2f} s (includes start-up)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
