"""Time the batched OMP kernel under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py --columns 2000 --atoms 256 --tau 20

The numba timing excludes the first (compiling) call.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fakepolisher import _kernels
from fakepolisher.synth import generate_clean_corpus
from fakepolisher.experiment import patch_matrix


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--columns", type=int, default=2000)
    parser.add_argument("--atoms", type=int, default=256)
    parser.add_argument("--tau", type=int, default=20)
    parser.add_argument("--dropout", type=float, default=0.1)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    images = generate_clean_corpus(max(1, args.columns // 49 + 1), 32, 1, args.seed)
    Y, _ = patch_matrix(images, 8, 4)
    Y = Y[:, : args.columns]
    D = rng.standard_normal((Y.shape[0], args.atoms))
    D /= np.linalg.norm(D, axis=0)
    keep = rng.random(Y.shape) >= args.dropout

    print(f"OMP batch: d={Y.shape[0]} m={args.atoms} n={Y.shape[1]} tau={args.tau} dropout={args.dropout}")
    t_np = _best_of(lambda: _kernels.run_omp_batch(D, Y, keep, args.tau, backend="numpy"), args.repeats)
    print(f"  numpy : {t_np:8.3f} s  ({1e6 * t_np / Y.shape[1]:7.1f} us/column)")
    if not _kernels.HAVE_NUMBA:
        print("  numba : unavailable (not installed or FAKEPOLISHER_DISABLE_NUMBA set)")
        return
    t0 = time.perf_counter()
    _kernels.run_omp_batch(D, Y[:, :2], keep[:, :2], args.tau, backend="numba")
    print(f"  numba first call (compile or cache load): {time.perf_counter() - t0:.2f} s")
    t_nb = _best_of(lambda: _kernels.run_omp_batch(D, Y, keep, args.tau, backend="numba"), args.repeats)
    print(f"  numba : {t_nb:8.3f} s  ({1e6 * t_nb / Y.shape[1]:7.1f} us/column)")
    print(f"  speedup: {t_np / t_nb:.1f}x")
    a = _kernels.run_omp_batch(D, Y, keep, args.tau, backend="numpy")
    b = _kernels.run_omp_batch(D, Y, keep, args.tau, backend="numba")
    same = np.array_equal(a[0], b[0])
    print(f"  supports identical: {same}; max |value diff|: {np.max(np.abs(a[1] - b[1])):.2e}")


if __name__ == "__main__":
    main()
