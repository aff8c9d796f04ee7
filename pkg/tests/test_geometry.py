from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facebench.errors import InvalidGeometry
from facebench.geometry import (
    BoundingBox,
    Detection,
    EllipseRegion,
    clip_to_frame,
    ellipse_to_bbox,
    iou,
    nms,
    pairwise_iou,
)

from conftest import boxes, detections, finite
from oracles import ellipse_boundary_points, raster_ellipse_extents, raster_iou


class TestBoundingBox:
    def test_rejects_degenerate(self):
        with pytest.raises(InvalidGeometry):
            BoundingBox(0, 0, 0, 1)
        with pytest.raises(InvalidGeometry):
            BoundingBox(0, 0, 1, -2)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidGeometry):
            BoundingBox(float("nan"), 0, 1, 1)
        with pytest.raises(InvalidGeometry):
            BoundingBox(0, float("inf"), 1, 1)

    def test_detection_rejects_nan_score(self):
        with pytest.raises(InvalidGeometry):
            Detection(BoundingBox(0, 0, 1, 1), float("nan"))


class TestIou:
    def test_identity(self):
        assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(0, 0, 2, 2)) == 1.0

    def test_disjoint(self):
        assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(5, 5, 1, 1)) == 0.0

    def test_one_third_overlap(self):
        # intersection 1x2 = 2, union 4 + 4 - 2 = 6
        a, b = BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 2, 2)
        assert iou(a, b) == pytest.approx(1 / 3, abs=1e-12)
        assert raster_iou(a, b) == pytest.approx(1 / 3, abs=2e-2)

    def test_touching_edges_is_zero(self):
        assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(1, 0, 1, 1)) == 0.0

    @given(a=boxes, b=boxes)
    def test_symmetry_and_range(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    @given(a=boxes)
    def test_self_iou_is_one(self, a):
        assert iou(a, a) == 1.0

    @given(a=boxes, b=boxes, s=finite(0.1, 10.0), tx=finite(-50, 50), ty=finite(-50, 50))
    def test_scale_translation_invariance(self, a, b, s, tx, ty):
        def xform(box):
            return BoundingBox(s * box.x + tx, s * box.y + ty, s * box.w, s * box.h)

        assert iou(xform(a), xform(b)) == pytest.approx(iou(a, b), abs=1e-12)

    @given(a=boxes, b=boxes)
    @settings(max_examples=200)
    def test_matches_raster_oracle(self, a, b):
        assert iou(a, b) == pytest.approx(raster_iou(a, b), abs=2e-2)

    def test_pairwise_matches_scalar(self):
        rng = np.random.default_rng(7)
        bs = [
            BoundingBox(*rng.uniform(-10, 10, 2), *rng.uniform(0.5, 8, 2))
            for _ in range(20)
        ]
        mat = pairwise_iou(bs, bs)
        for i in range(20):
            for j in range(20):
                assert mat[i, j] == pytest.approx(iou(bs[i], bs[j]), abs=1e-12)


ellipses = st.builds(
    lambda cx, cy, b, extra, theta: EllipseRegion(cx, cy, b + extra, b, theta),
    cx=finite(-50, 50),
    cy=finite(-50, 50),
    b=finite(0.5, 20.0),
    extra=finite(0.0, 20.0),
    theta=finite(-math.pi, math.pi),
)


class TestEllipseToBbox:
    def test_axis_aligned(self):
        box = ellipse_to_bbox(EllipseRegion(0, 0, 2, 1, 0.0))
        assert (box.x, box.y, box.w, box.h) == (-2.0, -1.0, 4.0, 2.0)

    def test_quarter_turn_swaps_extents(self):
        box = ellipse_to_bbox(EllipseRegion(0, 0, 2, 1, math.pi / 2))
        assert box.x == pytest.approx(-1.0, abs=1e-12)
        assert box.y == pytest.approx(-2.0, abs=1e-12)
        assert box.w == pytest.approx(2.0, abs=1e-12)
        assert box.h == pytest.approx(4.0, abs=1e-12)

    def test_diagonal_rotation(self):
        half = math.sqrt(2.5)
        box = ellipse_to_bbox(EllipseRegion(0, 0, 2, 1, math.pi / 4))
        assert box.x == pytest.approx(-half, abs=1e-12)
        assert box.y == pytest.approx(-half, abs=1e-12)
        assert box.w == pytest.approx(2 * half, abs=1e-12)
        assert box.h == pytest.approx(2 * half, abs=1e-12)

    def test_rejects_bad_axes(self):
        with pytest.raises(InvalidGeometry):
            EllipseRegion(0, 0, 1, 2, 0.0)
        with pytest.raises(InvalidGeometry):
            EllipseRegion(0, 0, 1, 0, 0.0)

    @given(e=ellipses)
    @settings(max_examples=150)
    def test_contains_boundary(self, e):
        box = ellipse_to_bbox(e)
        pts = ellipse_boundary_points(e)
        assert (pts[:, 0] >= box.x - 1e-9).all()
        assert (pts[:, 0] <= box.x2 + 1e-9).all()
        assert (pts[:, 1] >= box.y - 1e-9).all()
        assert (pts[:, 1] <= box.y2 + 1e-9).all()

    @given(e=ellipses)
    @settings(max_examples=50)
    def test_minimal_against_raster_oracle(self, e):
        box = ellipse_to_bbox(e)
        half_w, half_h, cell_w, cell_h = raster_ellipse_extents(e)
        # near an extreme the ellipse thins to ~ b*sqrt(2*delta/a), so the
        # raster can miss the tip by up to a*(cell/b)^2 beyond one cell
        slack = cell_w + e.a * (cell_w / e.b) ** 2
        assert half_w <= box.w / 2 <= half_w + slack
        assert half_h <= box.h / 2 <= half_h + slack

    @given(e=ellipses)
    @settings(max_examples=100)
    def test_minimal_against_dense_boundary(self, e):
        # no smaller axis-aligned box contains the boundary: the box
        # half-extents equal the sampled boundary extremes up to sampling error
        box = ellipse_to_bbox(e)
        pts = ellipse_boundary_points(e, n=3600)
        assert box.w / 2 <= np.max(np.abs(pts[:, 0] - e.cx)) + 1e-3
        assert box.h / 2 <= np.max(np.abs(pts[:, 1] - e.cy)) + 1e-3


class TestNms:
    def test_empty(self):
        assert nms([], 0.3) == []

    def test_disjoint_kept(self):
        dets = [
            Detection(BoundingBox(0, 0, 1, 1), 0.2),
            Detection(BoundingBox(5, 5, 1, 1), 0.9),
        ]
        kept = nms(dets, 0.3)
        assert len(kept) == 2
        assert kept[0].score == 0.9

    def test_duplicate_suppressed(self):
        dets = [
            Detection(BoundingBox(0, 0, 2, 2), 0.9),
            Detection(BoundingBox(0, 0, 2, 2), 0.8),
        ]
        kept = nms(dets, 0.3)
        assert kept == [dets[0]]

    def test_tie_broken_by_input_order(self):
        dets = [
            Detection(BoundingBox(0, 0, 2, 2), 0.5),
            Detection(BoundingBox(0.5, 0, 2, 2), 0.5),
        ]
        assert nms(dets, 0.3) == [dets[0]]

    @given(dets=st.lists(detections, max_size=12), thr=finite(0.05, 1.0))
    @settings(max_examples=200)
    def test_suppression_properties(self, dets, thr):
        kept = nms(dets, thr)
        # subset, descending score order
        assert all(k in dets for k in kept)
        assert all(kept[i].score >= kept[i + 1].score for i in range(len(kept) - 1))
        # every discarded detection overlaps a kept one of >= score at >= thr
        for d in dets:
            if d in kept:
                continue
            assert any(
                k.score >= d.score and iou(k.box, d.box) >= thr for k in kept
            )
        # idempotent
        assert nms(kept, thr) == kept


class TestClipToFrame:
    def test_corner_clip(self):
        box = clip_to_frame(BoundingBox(-1, -1, 3, 3), 10, 10)
        assert (box.x, box.y, box.w, box.h) == (0.0, 0.0, 2.0, 2.0)

    def test_fully_inside(self):
        box = clip_to_frame(BoundingBox(2, 2, 3, 3), 10, 10)
        assert (box.x, box.y, box.w, box.h) == (2, 2, 3, 3)

    def test_fully_outside(self):
        assert clip_to_frame(BoundingBox(20, 20, 5, 5), 10, 10) is None

    def test_touching_border_is_empty(self):
        assert clip_to_frame(BoundingBox(10, 0, 5, 5), 10, 10) is None

    def test_bad_frame(self):
        with pytest.raises(ValueError):
            clip_to_frame(BoundingBox(0, 0, 1, 1), 0, 10)
