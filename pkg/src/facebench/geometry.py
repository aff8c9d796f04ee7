"""Rectangle and ellipse geometry: IOU, ellipse conversion, NMS, clipping.

Coordinates are continuous pixels, origin top-left, x rightward, y downward.
Areas are exact products w*h; there is no integer pixel-inclusive convention
anywhere in the harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidGeometry


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle (x, y) top-left corner, (w, h) extents."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidGeometry(f"non-finite {name}={v!r}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidGeometry(f"degenerate box: w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h


@dataclass(frozen=True)
class EllipseRegion:
    """Rotated ellipse: center, semi-axes a >= b, rotation theta in radians
    counterclockwise from the x-axis (the FDDB annotation convention)."""

    cx: float
    cy: float
    a: float
    b: float
    theta: float

    def __post_init__(self):
        for name in ("cx", "cy", "a", "b", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidGeometry(f"non-finite {name}")
        if not (self.a >= self.b > 0):
            raise InvalidGeometry(f"semi-axes must satisfy a >= b > 0, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class Detection:
    """A bounding box with a detector confidence (any finite real)."""

    box: BoundingBox
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise InvalidGeometry(f"non-finite score {self.score!r}")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when interiors are disjoint."""
    ax2, ay2, bx2, by2 = a.x2, a.y2, b.x2, b.y2
    iw = min(ax2, bx2) - max(a.x, b.x)
    ih = min(ay2, by2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # areas from the same corner arithmetic as the intersection, so that
    # inter <= area holds exactly in floating point and iou(a, a) == 1.0
    area_a = (ax2 - a.x) * (ay2 - a.y)
    area_b = (bx2 - b.x) * (by2 - b.y)
    return inter / (area_a + area_b - inter)


def ellipse_to_bbox(e: EllipseRegion) -> BoundingBox:
    """Tightest axis-aligned box containing a rotated ellipse.

    The extreme x offset of the ellipse boundary is sqrt(a^2 cos^2 t + b^2 sin^2 t)
    and symmetrically for y, both centered on (cx, cy).
    """
    c, s = math.cos(e.theta), math.sin(e.theta)
    half_w = math.sqrt((e.a * c) ** 2 + (e.b * s) ** 2)
    half_h = math.sqrt((e.a * s) ** 2 + (e.b * c) ** 2)
    return BoundingBox(e.cx - half_w, e.cy - half_h, 2 * half_w, 2 * half_h)


def boxes_to_array(boxes) -> np.ndarray:
    """Pack BoundingBox (or Detection .box) objects into an (N, 4) array."""
    out = np.empty((len(boxes), 4))
    for i, b in enumerate(boxes):
        if isinstance(b, Detection):
            b = b.box
        out[i, 0], out[i, 1], out[i, 2], out[i, 3] = b.x, b.y, b.w, b.h
    return out


def pairwise_iou(a, b) -> np.ndarray:
    """IOU matrix between two box sequences, shape (len(a), len(b))."""
    return _kernels.pairwise_iou(boxes_to_array(a), boxes_to_array(b))


def score_order(scores) -> np.ndarray:
    """Indices in descending-score order, ties broken by input position."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def nms(dets: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the highest-score remaining detection (ties by input
    order) and discards remaining detections with IOU >= iou_threshold
    against it. Output is in descending-score order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    if not dets:
        return []
    boxes = boxes_to_array(dets)
    order = score_order([d.score for d in dets])
    keep = _kernels.nms_keep(boxes, order, iou_threshold)
    return [dets[i] for i in order if keep[i]]


def clip_to_frame(box: BoundingBox, frame_w: float, frame_h: float) -> BoundingBox | None:
    """Intersect a box with [0, frame_w] x [0, frame_h].

    Returns None when the intersection has zero width or height.
    """
    if frame_w <= 0 or frame_h <= 0:
        raise ValueError("frame dimensions must be positive")
    x1 = max(box.x, 0.0)
    y1 = max(box.y, 0.0)
    x2 = min(box.x2, frame_w)
    y2 = min(box.y2, frame_h)
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        return None
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)
