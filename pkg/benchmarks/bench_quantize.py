"""Compare the compiled and numpy kernels of the radial quantization path.

    python benchmarks/bench_quantize.py [--sizes 16 32] [--repeat 3] [--threads 1]

Prints wall time per application for each backend and the relative
difference of their outputs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from heiscalc.geometry import levi_from_matrix
from heiscalc.parametrix import ParametrixEngine, build_parametrix_symbol
from heiscalc.quantize import GridSpec, available_backends, make_s0, quantize_apply, set_backend


def _time(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    L = np.array([[0.0, -2.0], [2.0, 0.0]])
    q = build_parametrix_symbol(ParametrixEngine(levi_from_matrix(L)), 0.0)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'N':>4} " + " ".join(f"{b + ' [s]':>14}" for b in backends) + f" {'speedup':>9} {'rel diff':>10}")
    for N in args.sizes:
        grid = GridSpec.cube(3, N, 8.0)
        f = make_s0(grid, seed=0).samples
        times, outs = {}, {}
        for b in backends:
            prev = set_backend(b)
            try:
                run = lambda: quantize_apply(q, L, grid, f, nthreads=args.threads, path="radial")
                outs[b] = run()
                times[b] = _time(run, args.repeat)
            finally:
                set_backend(prev)
        row = f"{N:>4} " + " ".join(f"{times[b]:>14.4f}" for b in backends)
        if len(backends) == 2:
            a, c = outs["compiled"], outs["numpy"]
            diff = np.abs(a - c).max() / np.abs(c).max()
            row += f" {times['numpy'] / times['compiled']:>9.2f} {diff:>10.1e}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
