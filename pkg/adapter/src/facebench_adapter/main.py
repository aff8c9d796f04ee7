"""Batch face detection over a facebench manifest.

Protocol (see the harness documentation):
  input:  manifest file, one "frame_id<TAB>image_path" line per frame
  output: detection CSV with header "frame_id,x,y,w,h,score", one row per
          detection, coordinates in continuous pixels with top-left origin

The wrapped detector is scikit-image's pretrained LBP frontal-face cascade,
which ships with the library and runs deterministically on CPU. It reports
no confidence values, so every detection carries score 1.0; a min_score
above 1.0 therefore suppresses all output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from skimage import data
from skimage.feature import Cascade
from skimage.io import imread

MODELS = ("lbp-frontal",)

CSV_HEADER = "frame_id,x,y,w,h,score"


def read_manifest(path: str) -> list[tuple[str, str]]:
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0]:
            raise ValueError(f"{path}:{lineno}: expected 'frame_id<TAB>image_path'")
        entries.append((parts[0], parts[1]))
    return entries


def _load_detector(model_choice: str) -> Cascade:
    if model_choice not in MODELS:
        raise ValueError(f"unknown model {model_choice!r}; available: {', '.join(MODELS)}")
    return Cascade(data.lbp_frontal_face_cascade_filename())


def detect_faces(detector: Cascade, image) -> list[tuple[float, float, float, float, float]]:
    """(x, y, w, h, score) boxes, top-left origin, scan order of the cascade."""
    h, w = image.shape[:2]
    found = detector.detect_multi_scale(
        img=image,
        scale_factor=1.2,
        step_ratio=1,
        min_size=(24, 24),
        max_size=(h, w),
    )
    return [
        (float(f["c"]), float(f["r"]), float(f["width"]), float(f["height"]), 1.0)
        for f in found
    ]


def adapter_main(
    manifest_path: str,
    output_path: str,
    model_choice: str = "lbp-frontal",
    min_score: float = 0.0,
) -> int:
    """Run detection over every manifest frame; returns the process exit code.

    Unreadable images produce one diagnostic line each on stderr and a
    nonzero exit, but detection continues over the remaining frames.
    """
    try:
        entries = read_manifest(manifest_path)
        detector = _load_detector(model_choice)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rows = [CSV_HEADER]
    failures = 0
    for frame_id, image_path in entries:
        try:
            image = imread(image_path)
        except (OSError, ValueError) as exc:
            print(f"error: frame {frame_id}: cannot read {image_path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        boxes = [b for b in detect_faces(detector, image) if b[4] >= min_score]
        if not boxes:
            print(f"frame {frame_id}: no detections", file=sys.stderr)
        for x, y, w, h, score in boxes:
            rows.append(f"{frame_id},{x},{y},{w},{h},{score}")

    Path(output_path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return 1 if failures else 0


def cli(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="facebench-adapter",
        description="Reference face detection adapter (manifest in, detection CSV out).",
    )
    parser.add_argument("manifest", help="manifest file (frame_id<TAB>image_path lines)")
    parser.add_argument("output", help="detection CSV output path")
    parser.add_argument("--model", default="lbp-frontal", help=f"one of: {', '.join(MODELS)}")
    parser.add_argument("--min-score", type=float, default=0.0)
    args = parser.parse_args(argv)
    return adapter_main(args.manifest, args.output, args.model, args.min_score)


if __name__ == "__main__":
    sys.exit(cli())
