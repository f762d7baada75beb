"""Time the numba and numpy backends of the two hot loops.

    python3 benchmarks/bench_kernels.py --repeat 5 --n-lambda 4096

The first numba call of each kernel includes JIT compilation (or a cache
load) and is timed separately as "warmup".
"""
import argparse
import statistics
import time

import numpy as np

from discscat import _accel, _kernels
from discscat.io import smooth_bump
from discscat.jost import build_mesh, jost_batch
from discscat.model import DensityProfile, NumericsConfig, PotentialSpec


def timed(fn, repeat):
    t0 = time.perf_counter()
    out = fn()
    warm = time.perf_counter() - t0
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        runs.append(time.perf_counter() - t0)
    return out, warm, statistics.median(runs)


def fourier_case(n_lambda, n_t):
    lam = np.linspace(-40.0, 40.0, n_lambda)
    wg = np.exp(-lam ** 2 / 50.0) * (1.0 + 0.3j * np.sin(lam))
    t = np.linspace(-10.0, 20.0, n_t)
    return lambda: _kernels.fourier_sum(lam, wg, t)


def jost_case(n_lambda):
    p = DensityProfile(2.0, 1.0)
    q = PotentialSpec.from_function(lambda x: smooth_bump(x, 2.5, 1.0, 1.0), 3.5, 0.005)
    cfg = NumericsConfig(n_lambda=n_lambda).resolve(p, q)
    mesh = build_mesh(p, q, cfg)
    lams = cfg.lambda_grid()
    return lambda: jost_batch(p, q, lams, cfg, mesh=mesh)[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="timed runs per case after warmup")
    ap.add_argument("--n-lambda", type=int, default=1024, help="lambda samples per case")
    ap.add_argument("--n-t", type=int, default=4000, help="t nodes for the Fourier sum")
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    cases = {"fourier_sum": fourier_case(args.n_lambda, args.n_t),
             "jost_batch (dp5)": jost_case(args.n_lambda)}
    print(f"{'kernel':<18} {'backend':<7} {'warmup s':>10} {'median s':>10} {'speedup':>8} {'max diff':>10}")
    for name, fn in cases.items():
        ref, base = None, None
        for b in backends:
            prev = _accel.set_backend(b)
            try:
                out, warm, med = timed(fn, args.repeat)
            finally:
                _accel.set_backend(prev)
            if ref is None:
                ref, base = out, med
            diff = float(np.max(np.abs(out - ref)))
            print(f"{name:<18} {b:<7} {warm:>10.4f} {med:>10.4f} {base / med:>8.2f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
