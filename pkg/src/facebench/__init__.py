"""Detector-agnostic face detection benchmarking harness."""

from .geometry import (
    BoundingBox,
    Detection,
    EllipseRegion,
    clip_to_frame,
    ellipse_to_bbox,
    iou,
    nms,
)
from .formats import (
    Corpus,
    FrameAnnotation,
    FrameDetections,
    parse_csv_annotations,
    parse_csv_detections,
    parse_fddb_annotations,
    parse_fddb_detections,
    write_annotations_csv,
    write_detections,
)
from .matching import MatchOutcome, match_corpus, match_frame
from .metrics import PrResult, RocCurve, per_video_report, precision_recall, roc_curve
from .pipeline import (
    AdapterConfig,
    EvaluationConfig,
    EvaluationReport,
    RunManifest,
    evaluate,
    ingest_frames,
    plot_roc,
    render_overlays,
    run_adapter,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Detection",
    "EllipseRegion",
    "clip_to_frame",
    "ellipse_to_bbox",
    "iou",
    "nms",
    "Corpus",
    "FrameAnnotation",
    "FrameDetections",
    "parse_csv_annotations",
    "parse_csv_detections",
    "parse_fddb_annotations",
    "parse_fddb_detections",
    "write_annotations_csv",
    "write_detections",
    "MatchOutcome",
    "match_corpus",
    "match_frame",
    "PrResult",
    "RocCurve",
    "per_video_report",
    "precision_recall",
    "roc_curve",
    "AdapterConfig",
    "EvaluationConfig",
    "EvaluationReport",
    "RunManifest",
    "evaluate",
    "ingest_frames",
    "plot_roc",
    "render_overlays",
    "run_adapter",
]
