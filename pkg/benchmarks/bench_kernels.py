"""Compiled vs pure-Python raster kernels on the same pixels.

    python benchmarks/bench_kernels.py [--size N] [--repeat R]

Prints one line per kernel with both timings, the speedup and whether the
two backends produced identical codes.
"""
import argparse
import time

import numpy as np

from implosion import _backend, _kernels_py
from implosion import scan as S
from implosion.lavaurs import build_lavaurs
from implosion.poly import PolyMap


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _codes(out):
    return out[0] if isinstance(out, tuple) else out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _backend.COMPILED:
        raise SystemExit("compiled kernels are not available; build the extension first")
    fast, pure = _backend.kernels, _kernels_py
    n = args.size
    ss = S.GridSpec(n, n, S.H_VIEWPORT).coords().ravel()
    zs = S.GridSpec(n, n, (-1.5, -1.5, 1.5, 1.5)).coords().ravel()
    qs = S.GridSpec(n, n, S.QUAD_VIEWPORT).coords().ravel()
    J = S.kernel_jet(build_lavaurs(PolyMap.cubic(1.2), 0))
    Jq = S.kernel_jet(build_lavaurs(PolyMap.quadratic(), 0))
    cases = [
        ("esc_raster", lambda K: K.esc_raster(ss, 0j, S.N_MAX, S.BUDGET)),
        ("dyn_raster cubic", lambda K: K.dyn_raster(J, zs, 0j, S.N_MAX, S.BUDGET)),
        ("dyn_raster quadratic", lambda K: K.dyn_raster(Jq, qs, 0j, 1, S.BUDGET)),
        ("central_raster", lambda K: K.central_raster(ss, False, 1 + 0j, S.BUDGET)),
    ]
    print(f"{n}x{n} pixels, best of {args.repeat}")
    print(f"{'kernel':<22}{'cython s':>10}{'python s':>10}{'speedup':>9}  same codes")
    for name, run in cases:
        tf, of = _best(lambda: run(fast), args.repeat)
        tp, op = _best(lambda: run(pure), 1)
        same = np.array_equal(_codes(of), _codes(op))
        print(f"{name:<22}{tf:>10.4f}{tp:>10.4f}{tp / tf:>9.1f}  {same}")


if __name__ == "__main__":
    main()
