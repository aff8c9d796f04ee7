#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The same comparison can be forced at the library level by setting
FACEBENCH_DISABLE_NUMBA=1 before importing facebench.
"""

from __future__ import annotations

import time

import numpy as np

from facebench import _kernels


def random_boxes(rng, n):
    out = np.empty((n, 4))
    out[:, 0:2] = rng.uniform(0, 1000, (n, 2))
    out[:, 2:4] = rng.uniform(5, 80, (n, 2))
    return out


def timeit(fn, *args, repeats=20):
    fn(*args)  # warm-up (includes JIT compilation for the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if not _kernels.NUMBA_ENABLED:
        print("numba path unavailable (FACEBENCH_DISABLE_NUMBA set or numba missing);")
        print("only the numpy fallback will be timed.")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<16} {'size':<12} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n in (100, 500, 2000):
        a, b = random_boxes(rng, n), random_boxes(rng, n)
        t_np = timeit(_kernels._pairwise_iou_np, a, b)
        row = f"{'pairwise_iou':<16} {f'{n}x{n}':<12} {t_np * 1e3:>8.2f}ms"
        if _kernels.NUMBA_ENABLED:
            t_nb = timeit(_kernels._pairwise_iou_nb, a, b)
            row += f" {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
        print(row)

    for n in (100, 500, 2000):
        boxes = random_boxes(rng, n)
        order = np.argsort(-rng.uniform(0, 1, n), kind="stable")
        t_np = timeit(_kernels._nms_keep_np, boxes, order, 0.5)
        row = f"{'nms_keep':<16} {n:<12} {t_np * 1e3:>8.2f}ms"
        if _kernels.NUMBA_ENABLED:
            t_nb = timeit(_kernels._nms_keep_nb, boxes, order, 0.5)
            row += f" {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
        print(row)

    for n_det, n_gt in ((50, 50), (200, 200)):
        iou = _kernels._pairwise_iou_np(random_boxes(rng, n_det), random_boxes(rng, n_gt))
        order = np.argsort(-rng.uniform(0, 1, n_det), kind="stable")
        t_np = timeit(_kernels._greedy_match_np, iou, order, 0.5)
        row = f"{'greedy_match':<16} {f'{n_det}x{n_gt}':<12} {t_np * 1e3:>8.2f}ms"
        if _kernels.NUMBA_ENABLED:
            t_nb = timeit(_kernels._greedy_match_nb, iou, order, 0.5)
            row += f" {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
