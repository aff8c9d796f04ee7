"""Per-frame detection-to-ground-truth assignment at an IOU threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DuplicateFrame
from .formats import Corpus
from .geometry import BoundingBox, Detection, boxes_to_array, score_order

MODE_STRICT = "strict"
MODE_BEST_OVERLAP = "best-overlap"


@dataclass(frozen=True)
class MatchOutcome:
    """Partition of one frame's detections and ground truths.

    Every detection index lands in exactly one of pairs or false_positives;
    every gt index in exactly one of pairs or false_negatives.
    """

    pairs: tuple[tuple[int, int, float], ...]
    false_positives: tuple[int, ...]
    false_negatives: tuple[int, ...]
    threshold: float


@dataclass(frozen=True)
class CorpusMatchResult:
    """Frame outcomes in annotation-corpus order, plus diagnostics about
    detection frames that had no annotation entry (excluded from scoring)."""

    outcomes: tuple[MatchOutcome, ...]
    unannotated_frames: tuple[str, ...]
    unannotated_detections: int


def match_frame(
    dets: list[Detection],
    gts: list[BoundingBox],
    iou_threshold: float,
    mode: str = MODE_STRICT,
) -> MatchOutcome:
    """Greedy assignment: detections in descending score order (ties by
    input index) each claim the unmatched gt of highest IOU, if that IOU
    reaches the threshold; the rest are false positives.

    In best-overlap mode only the single detection with the highest IOU
    against any gt (highest score when there are no gts) is evaluated;
    other detections are dropped from the frame before matching.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    if mode not in (MODE_STRICT, MODE_BEST_OVERLAP):
        raise ValueError(f"unknown matching mode {mode!r}")

    det_indices = list(range(len(dets)))
    if mode == MODE_BEST_OVERLAP and len(dets) > 1:
        if gts:
            overlap = _kernels.pairwise_iou(boxes_to_array(dets), boxes_to_array(gts))
            best = int(np.argmax(overlap.max(axis=1)))
        else:
            best = int(score_order([d.score for d in dets])[0])
        dets = [dets[best]]
        det_indices = [best]

    if not dets or not gts:
        return MatchOutcome(
            pairs=(),
            false_positives=tuple(det_indices),
            false_negatives=tuple(range(len(gts))),
            threshold=iou_threshold,
        )

    iou_mat = _kernels.pairwise_iou(boxes_to_array(dets), boxes_to_array(gts))
    order = score_order([d.score for d in dets])
    assign = _kernels.greedy_match(iou_mat, order, iou_threshold)

    pairs = []
    false_positives = []
    for d in order:
        g = int(assign[d])
        if g >= 0:
            pairs.append((det_indices[d], g, float(iou_mat[d, g])))
        else:
            false_positives.append(det_indices[d])
    matched_gts = {g for _, g, _ in pairs}
    false_negatives = tuple(g for g in range(len(gts)) if g not in matched_gts)
    return MatchOutcome(
        pairs=tuple(pairs),
        false_positives=tuple(false_positives),
        false_negatives=false_negatives,
        threshold=iou_threshold,
    )


def match_corpus(
    dets: Corpus,
    gts: Corpus,
    iou_threshold: float,
    score_threshold: float | None = None,
    mode: str = MODE_STRICT,
) -> CorpusMatchResult:
    """Match every annotated frame; annotated frames missing from the
    detection corpus are treated as having zero detections. Detection
    frames absent from the annotations are excluded and reported."""
    det_by_id = dets.by_id()
    gt_ids = set()
    outcomes = []
    for frame in gts.frames:
        if frame.frame_id in gt_ids:
            raise DuplicateFrame(f"duplicate frame_id {frame.frame_id!r}")
        gt_ids.add(frame.frame_id)
        det_frame = det_by_id.get(frame.frame_id)
        frame_dets = list(det_frame.detections) if det_frame else []
        if score_threshold is not None:
            frame_dets = [d for d in frame_dets if d.score >= score_threshold]
        outcomes.append(
            match_frame(frame_dets, list(frame.ground_truth), iou_threshold, mode)
        )
    unannotated = tuple(f.frame_id for f in dets.frames if f.frame_id not in gt_ids)
    n_ignored = sum(len(det_by_id[fid].detections) for fid in unannotated)
    return CorpusMatchResult(tuple(outcomes), unannotated, n_ignored)
