"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from abscs import _fallback
from abscs.signal import gen_sensing_matrix, gen_sparse_signal, measure

try:
    from abscs import _kernels
except ImportError:
    _kernels = None


def _instance(seed, m, n, k, bits):
    rng = np.random.default_rng(seed)
    phi = gen_sensing_matrix(rng, n, m).entries
    y = measure(phi, gen_sparse_signal(rng, m, k))
    levels = 1 << bits
    flat = np.tile(np.linspace(-1.5, 1.5, levels) * y.std(), n)
    offsets = np.arange(n + 1, dtype=np.intp) * levels
    return phi, y, flat, offsets


def _time(fn, repeat):
    t = timeit.Timer(fn)
    loops, _ = t.autorange()
    return min(t.repeat(repeat, loops)) / loops


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = [("python", _fallback)] + ([("compiled", _kernels)] if _kernels else [])
    cases = [(128, 32, 9, 3), (128, 64, 9, 1), (512, 128, 35, 3)]
    print(f"{'kernel':<10}{'m':>5}{'n':>5}{'k':>4}{'bits':>5}  " + "".join(f"{name:>14}" for name, _ in mods)
          + ("     speedup" if len(mods) == 2 else ""))
    for m, n, k, bits in cases:
        phi, y, flat, offsets = _instance(0, m, n, k, bits)
        xt = _fallback.omp(phi, y, k)[0]
        idx0 = np.zeros(n, dtype=np.intp)
        omp_t, sweep_t = [], []
        for _, mod in mods:
            omp_t.append(_time(lambda: mod.omp(phi, y, k), args.repeat))
            sweep_t.append(_time(lambda: mod.abs_sweep_omp(phi, flat, offsets, xt, flat[offsets[:-1]].copy(),
                                                           idx0.copy(), k), max(1, args.repeat // 2)))
        for label, ts in (("omp", omp_t), ("sweep", sweep_t)):
            row = f"{label:<10}{m:>5}{n:>5}{k:>4}{bits:>5}  " + "".join(f"{t * 1e3:>11.3f} ms" for t in ts)
            if len(ts) == 2:
                row += f"{ts[0] / ts[1]:>11.1f}x"
            print(row)


if __name__ == "__main__":
    main()
