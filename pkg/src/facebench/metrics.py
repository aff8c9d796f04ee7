"""Precision/recall aggregation and FDDB-style discrete-score ROC sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyGroundTruth, MixedThreshold
from .formats import Corpus
from .matching import MODE_STRICT, MatchOutcome, match_corpus

ROC_IOU_THRESHOLD = 0.5

OVERALL_KEY = "overall"


@dataclass(frozen=True)
class PrResult:
    """Pooled counts and the derived precision/recall at one IOU threshold.

    Empty denominators resolve to 1.0: no detections means perfect
    precision, no ground truth means perfect recall.
    """

    iou_threshold: float
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 1.0


@dataclass(frozen=True)
class RocCurve:
    """Points (score_threshold, total false positives, TPR), ordered by
    strictly decreasing threshold; x axis is absolute FP count, the FDDB
    comparison convention."""

    points: tuple[tuple[float, int, float], ...]
    iou_threshold: float = ROC_IOU_THRESHOLD


def precision_recall(outcomes: Iterable[MatchOutcome]) -> PrResult:
    """Pool TP/FP/FN counts over frame outcomes sharing one IOU threshold."""
    outcomes = list(outcomes)
    thresholds = {o.threshold for o in outcomes}
    if len(thresholds) > 1:
        raise MixedThreshold(f"outcomes mix IOU thresholds {sorted(thresholds)}")
    tp = sum(len(o.pairs) for o in outcomes)
    fp = sum(len(o.false_positives) for o in outcomes)
    fn = sum(len(o.false_negatives) for o in outcomes)
    threshold = thresholds.pop() if thresholds else float("nan")
    return PrResult(threshold, tp, fp, fn)


def roc_curve(dets: Corpus, gts: Corpus, mode: str = MODE_STRICT) -> RocCurve:
    """Sweep the score threshold over the distinct detection scores
    (descending) and evaluate the kept detections at IOU 0.5.

    A detection counts as a true positive iff it matches a ground truth at
    IOU >= 0.5 (the discrete-score protocol). TPR = TP / total ground truth.
    """
    total_gt = sum(len(f.ground_truth) for f in gts.frames)
    if total_gt == 0:
        raise EmptyGroundTruth("annotation corpus has no ground-truth boxes")
    scores = sorted(
        {d.score for f in dets.frames for d in f.detections}, reverse=True
    )
    points = []
    for threshold in scores:
        result = match_corpus(
            dets, gts, ROC_IOU_THRESHOLD, score_threshold=threshold, mode=mode
        )
        tp = sum(len(o.pairs) for o in result.outcomes)
        fp = sum(len(o.false_positives) for o in result.outcomes)
        points.append((threshold, fp, tp / total_gt))
    return RocCurve(tuple(points), ROC_IOU_THRESHOLD)


def per_video_report(
    groups: Mapping[str, Iterable[MatchOutcome]]
) -> list[tuple[str, PrResult]]:
    """One PrResult per video group plus a pooled "overall" row."""
    rows = []
    pooled: list[MatchOutcome] = []
    for video_id, outcomes in groups.items():
        outcomes = list(outcomes)
        rows.append((video_id, precision_recall(outcomes)))
        pooled.extend(outcomes)
    rows.append((OVERALL_KEY, precision_recall(pooled)))
    return rows
