"""Hot numeric kernels: pairwise IOU, greedy NMS, greedy assignment.

Two interchangeable implementations live here: numba ``@njit`` kernels and a
pure-numpy fallback. Selection happens once at import time. Set
``FACEBENCH_DISABLE_NUMBA=1`` to force the numpy path (or when numba is not
importable). ``benchmarks/bench_kernels.py`` compares the two.

Boxes are float64 arrays of shape (N, 4) in (x, y, w, h) order.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("FACEBENCH_DISABLE_NUMBA", "").strip() in {"1", "true", "yes"}


def _pairwise_iou_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IOU matrix of shape (len(a), len(b)), vectorized numpy."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    # corner-difference areas keep inter <= area exact in floating point
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    union = area_a + area_b - inter
    return inter / union


def _nms_keep_np(boxes: np.ndarray, order: np.ndarray, threshold: float) -> np.ndarray:
    """Greedy suppression; ``order`` is descending-score index order.

    Returns a boolean keep mask over the original indexing.
    """
    n = boxes.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    suppressed = np.zeros(n, dtype=np.bool_)
    iou = _pairwise_iou_np(boxes, boxes)
    for i in order:
        if suppressed[i]:
            continue
        keep[i] = True
        suppressed |= iou[i] >= threshold
        suppressed[i] = True
    return keep


def _greedy_match_np(iou: np.ndarray, det_order: np.ndarray, threshold: float) -> np.ndarray:
    """Assign each detection (in ``det_order``) its best unclaimed gt.

    ``iou`` has shape (n_det, n_gt). Returns per-detection gt index, -1 for
    unmatched. A claim requires IOU >= threshold; ties among gts go to the
    lowest gt index.
    """
    n_det, n_gt = iou.shape
    assign = np.full(n_det, -1, dtype=np.int64)
    taken = np.zeros(n_gt, dtype=np.bool_)
    for d in det_order:
        best_g = -1
        best_iou = 0.0
        for g in range(n_gt):
            if taken[g]:
                continue
            v = iou[d, g]
            if v >= threshold and v > best_iou:
                best_iou = v
                best_g = g
        if best_g >= 0:
            assign[d] = best_g
            taken[best_g] = True
    return assign


NUMBA_ENABLED = False

if not _DISABLE:
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        NUMBA_ENABLED = True

        @njit(cache=True)
        def _pairwise_iou_nb(a, b):
            n, m = a.shape[0], b.shape[0]
            out = np.zeros((n, m))
            for i in range(n):
                ax1, ay1 = a[i, 0], a[i, 1]
                ax2, ay2 = ax1 + a[i, 2], ay1 + a[i, 3]
                area_a = (ax2 - ax1) * (ay2 - ay1)
                for j in range(m):
                    bx1, by1 = b[j, 0], b[j, 1]
                    bx2, by2 = bx1 + b[j, 2], by1 + b[j, 3]
                    iw = min(ax2, bx2) - max(ax1, bx1)
                    ih = min(ay2, by2) - max(ay1, by1)
                    if iw <= 0.0 or ih <= 0.0:
                        continue
                    inter = iw * ih
                    area_b = (bx2 - bx1) * (by2 - by1)
                    out[i, j] = inter / (area_a + area_b - inter)
            return out

        @njit(cache=True)
        def _nms_keep_nb(boxes, order, threshold):
            n = boxes.shape[0]
            keep = np.zeros(n, dtype=np.bool_)
            suppressed = np.zeros(n, dtype=np.bool_)
            for oi in range(order.shape[0]):
                i = order[oi]
                if suppressed[i]:
                    continue
                keep[i] = True
                ax1, ay1 = boxes[i, 0], boxes[i, 1]
                ax2, ay2 = ax1 + boxes[i, 2], ay1 + boxes[i, 3]
                area_a = (ax2 - ax1) * (ay2 - ay1)
                for j in range(n):
                    if suppressed[j] or j == i:
                        continue
                    bx1, by1 = boxes[j, 0], boxes[j, 1]
                    bx2, by2 = bx1 + boxes[j, 2], by1 + boxes[j, 3]
                    iw = min(ax2, bx2) - max(ax1, bx1)
                    ih = min(ay2, by2) - max(ay1, by1)
                    if iw <= 0.0 or ih <= 0.0:
                        continue
                    inter = iw * ih
                    area_b = (bx2 - bx1) * (by2 - by1)
                    if inter / (area_a + area_b - inter) >= threshold:
                        suppressed[j] = True
                suppressed[i] = True
            return keep

        @njit(cache=True)
        def _greedy_match_nb(iou, det_order, threshold):
            n_det, n_gt = iou.shape
            assign = np.full(n_det, -1, dtype=np.int64)
            taken = np.zeros(n_gt, dtype=np.bool_)
            for oi in range(det_order.shape[0]):
                d = det_order[oi]
                best_g = -1
                best_iou = 0.0
                for g in range(n_gt):
                    if taken[g]:
                        continue
                    v = iou[d, g]
                    if v >= threshold and v > best_iou:
                        best_iou = v
                        best_g = g
                if best_g >= 0:
                    assign[d] = best_g
                    taken[best_g] = True
            return assign


if NUMBA_ENABLED:
    pairwise_iou = _pairwise_iou_nb
    nms_keep = _nms_keep_nb
    greedy_match = _greedy_match_nb
else:
    pairwise_iou = _pairwise_iou_np
    nms_keep = _nms_keep_np
    greedy_match = _greedy_match_np
