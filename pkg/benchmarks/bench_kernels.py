"""Benchmark the compiled kernels against their pure-numpy fallbacks.

Times the three hot paths — 3D component labeling, overlap-pair counting,
and the greedy min-distance update — on synthetic inputs, checks that both
implementations agree exactly, and prints a small table. Compiled timings
exclude the first (compilation) call.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--size 96] [--items 2048] [--dim 64]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from coreseg import _kernels
from coreseg.label_fusion import CONN_FULL26
from coreseg.rng import SplitMix64


def _timeit(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_label(size: int) -> tuple[float, float]:
    rng = np.random.default_rng(0)
    mask = (rng.random((size, size, size)) < 0.35).astype(np.uint32)
    offs = CONN_FULL26.prev_offsets

    out_nb = _kernels.label_components(mask, offs, use_numba=True)  # warm-up/compile
    out_np = _kernels.label_components(mask, offs, use_numba=False)
    if not np.array_equal(out_nb, out_np):
        raise SystemExit("label kernels disagree")

    t_nb = _timeit(lambda: _kernels.label_components(mask, offs, use_numba=True))
    t_np = _timeit(lambda: _kernels.label_components(mask, offs, use_numba=False))
    return t_nb, t_np


def bench_overlap(size: int) -> tuple[float, float]:
    rng = np.random.default_rng(1)
    pred = rng.integers(0, 40, size=(size, size, size), dtype=np.uint32)
    gt = rng.integers(0, 40, size=(size, size, size), dtype=np.uint32)

    out_nb = _kernels.overlap_pairs(pred, gt, use_numba=True)  # warm-up/compile
    out_np = _kernels.overlap_pairs(pred, gt, use_numba=False)
    same = all(np.array_equal(a, b) for a, b in zip(out_nb, out_np))
    if not same:
        raise SystemExit("overlap kernels disagree")

    t_nb = _timeit(lambda: _kernels.overlap_pairs(pred, gt, use_numba=True))
    t_np = _timeit(lambda: _kernels.overlap_pairs(pred, gt, use_numba=False))
    return t_nb, t_np


def bench_greedy(items: int, dim: int) -> tuple[float, float]:
    rng = np.random.default_rng(2)
    values = rng.normal(size=(items, dim))
    values /= np.linalg.norm(values, axis=1, keepdims=True)
    sel = np.zeros(items, dtype=np.bool_)
    for i in SplitMix64(7).sample(items, items // 2):
        sel[i] = True
    min_d = rng.random(items)
    row = np.clip(1.0 - values @ values[0], 0.0, 2.0)

    def run_nb():
        d = min_d.copy()
        return _kernels.min_update_argmax(d, row, sel, use_numba=True)

    def run_np():
        d = min_d.copy()
        return _kernels.min_update_argmax(d, row, sel, use_numba=False)

    if run_nb() != run_np():  # also warm-up/compile
        raise SystemExit("greedy-update kernels disagree")

    t_nb = _timeit(run_nb, repeats=20)
    t_np = _timeit(run_np, repeats=20)
    return t_nb, t_np


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=96, help="cube edge for volume benchmarks")
    parser.add_argument("--items", type=int, default=2048, help="item count for greedy update")
    parser.add_argument("--dim", type=int, default=64, help="embedding dimension")
    args = parser.parse_args()

    if not _kernels.HAS_NUMBA:
        print("numba is not installed; nothing to compare against the numpy path")
        return 0

    rows = [
        ("label_components", *bench_label(args.size)),
        ("overlap_pairs", *bench_overlap(args.size)),
        ("greedy_update", *bench_greedy(args.items, args.dim)),
    ]
    print(f"{'kernel':<18}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name, t_nb, t_np in rows:
        print(f"{name:<18}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
