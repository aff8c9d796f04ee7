"""Corpus file formats: FDDB ellipse/rect blocks and canonical CSV.

All parsers consume text (a string or a readable text stream), tolerate
trailing whitespace and blank separator lines, and fail with structured
errors carrying line numbers. Writers emit a canonical byte-stable form:
LF line endings, reals printed with round-trip precision and never in
scientific notation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Union

from .errors import DuplicateFrame, InvalidGeometry, MalformedBlock, MalformedRow
from .geometry import BoundingBox, Detection, EllipseRegion, ellipse_to_bbox

TextSource = Union[str, io.TextIOBase, Iterable[str]]

ANNOTATION_CSV_HEADER = ["frame_id", "x", "y", "w", "h"]
DETECTION_CSV_HEADER = ["frame_id", "x", "y", "w", "h", "score"]


@dataclass(frozen=True)
class FrameAnnotation:
    """Ground-truth boxes for one frame; the list may be empty."""

    frame_id: str
    ground_truth: tuple[BoundingBox, ...]

    def __post_init__(self):
        if not self.frame_id:
            raise ValueError("frame_id must be non-empty")
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))


@dataclass(frozen=True)
class FrameDetections:
    """Detector output for one frame, in detector emission order."""

    frame_id: str
    detections: tuple[Detection, ...]

    def __post_init__(self):
        if not self.frame_id:
            raise ValueError("frame_id must be non-empty")
        object.__setattr__(self, "detections", tuple(self.detections))


@dataclass(frozen=True)
class Corpus:
    """Ordered frames with unique frame_ids; source_path is provenance only."""

    frames: tuple
    source_path: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        seen = set()
        for f in self.frames:
            if f.frame_id in seen:
                raise DuplicateFrame(f"duplicate frame_id {f.frame_id!r}")
            seen.add(f.frame_id)

    def __len__(self) -> int:
        return len(self.frames)

    def by_id(self) -> dict:
        return {f.frame_id: f for f in self.frames}


def format_real(x: float) -> str:
    """Round-trip decimal rendering of a float, never scientific notation."""
    s = repr(float(x))
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s


def _lines(source: TextSource) -> list[str]:
    if isinstance(source, str):
        return source.splitlines()
    if hasattr(source, "read"):
        return source.read().splitlines()
    return [line.rstrip("\n").rstrip("\r") for line in source]


def _parse_float(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedBlock(f"non-numeric {what} {text!r}", lineno) from None


def _check_unique(frame_id: str, seen: set, lineno: int) -> None:
    if frame_id in seen:
        raise DuplicateFrame(f"duplicate frame_id {frame_id!r}", lineno)
    seen.add(frame_id)


def parse_fddb_annotations(source: TextSource, source_path: str = "") -> Corpus:
    """Parse FDDB ellipse annotation blocks into box ground truth.

    Block layout: image name line, face count line, then one ellipse line
    per face ("major minor angle cx cy label"). Ellipses are converted to
    their tight axis-aligned boxes.
    """
    lines = _lines(source)
    frames: list[FrameAnnotation] = []
    seen: set[str] = set()
    i = 0
    n = len(lines)
    while i < n:
        name = lines[i].strip()
        if not name:
            i += 1
            continue
        name_line = i + 1
        i += 1
        if i >= n:
            raise MalformedBlock(f"missing face count after image {name!r}", name_line)
        count_text = lines[i].strip()
        try:
            count = int(count_text)
        except ValueError:
            raise MalformedBlock(f"face count is not an integer: {count_text!r}", i + 1) from None
        if count < 0:
            raise MalformedBlock(f"negative face count {count}", i + 1)
        i += 1
        boxes = []
        for k in range(count):
            if i >= n or not lines[i].strip():
                raise MalformedBlock(
                    f"image {name!r} declares {count} faces but block ends after {k}", i + 1
                )
            parts = lines[i].split()
            if len(parts) != 6:
                raise MalformedBlock(f"expected 6 ellipse fields, got {len(parts)}", i + 1)
            a = _parse_float(parts[0], i + 1, "major axis")
            b = _parse_float(parts[1], i + 1, "minor axis")
            theta = _parse_float(parts[2], i + 1, "angle")
            cx = _parse_float(parts[3], i + 1, "center x")
            cy = _parse_float(parts[4], i + 1, "center y")
            try:
                boxes.append(ellipse_to_bbox(EllipseRegion(cx, cy, a, b, theta)))
            except InvalidGeometry as exc:
                raise InvalidGeometry(str(exc), i + 1) from None
            i += 1
        _check_unique(name, seen, name_line)
        frames.append(FrameAnnotation(name, tuple(boxes)))
    return Corpus(tuple(frames), source_path)


def parse_fddb_detections(source: TextSource, source_path: str = "") -> Corpus:
    """Parse FDDB-convention rectangle detections ("x y w h score" lines)."""
    lines = _lines(source)
    frames: list[FrameDetections] = []
    seen: set[str] = set()
    i = 0
    n = len(lines)
    while i < n:
        name = lines[i].strip()
        if not name:
            i += 1
            continue
        name_line = i + 1
        i += 1
        if i >= n:
            raise MalformedBlock(f"missing detection count after image {name!r}", name_line)
        count_text = lines[i].strip()
        try:
            count = int(count_text)
        except ValueError:
            raise MalformedBlock(
                f"detection count is not an integer: {count_text!r}", i + 1
            ) from None
        if count < 0:
            raise MalformedBlock(f"negative detection count {count}", i + 1)
        i += 1
        dets = []
        for k in range(count):
            if i >= n or not lines[i].strip():
                raise MalformedBlock(
                    f"image {name!r} declares {count} detections but block ends after {k}", i + 1
                )
            parts = lines[i].split()
            if len(parts) != 5:
                raise MalformedBlock(f"expected 5 rectangle fields, got {len(parts)}", i + 1)
            x = _parse_float(parts[0], i + 1, "x")
            y = _parse_float(parts[1], i + 1, "y")
            w = _parse_float(parts[2], i + 1, "w")
            h = _parse_float(parts[3], i + 1, "h")
            score = _parse_float(parts[4], i + 1, "score")
            try:
                dets.append(Detection(BoundingBox(x, y, w, h), score))
            except InvalidGeometry as exc:
                raise InvalidGeometry(str(exc), i + 1) from None
            i += 1
        _check_unique(name, seen, name_line)
        frames.append(FrameDetections(name, tuple(dets)))
    return Corpus(tuple(frames), source_path)


def _csv_rows(source: TextSource):
    lines = _lines(source)
    rows = []
    for i, line in enumerate(lines, start=1):
        try:
            rows.append(next(csv.reader([line]), []))
        except csv.Error as exc:
            raise MalformedRow(f"unparseable CSV: {exc}", i) from None
    return rows, lines


def _check_csv_header(rows, expected: list[str]) -> None:
    if not rows:
        raise MalformedRow(f"missing header {','.join(expected)!r}", 1)
    header = [c.strip() for c in rows[0]]
    if header != expected:
        raise MalformedRow(
            f"expected header {','.join(expected)!r}, got {','.join(header)!r}", 1
        )


def parse_csv_annotations(source: TextSource, source_path: str = "") -> Corpus:
    """Parse canonical annotation CSV ("frame_id,x,y,w,h").

    Rows sharing a frame_id are grouped; frame order is first appearance.
    A row with all four coordinate fields empty marks an annotated frame
    with zero faces.
    """
    rows, _ = _csv_rows(source)
    _check_csv_header(rows, ANNOTATION_CSV_HEADER)
    order: list[str] = []
    groups: dict[str, list[BoundingBox]] = {}
    for idx, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise MalformedRow(f"expected 5 fields, got {len(row)}", idx)
        frame_id = row[0]
        if not frame_id:
            raise MalformedRow("empty frame_id", idx)
        coords = [c.strip() for c in row[1:]]
        if frame_id not in groups:
            order.append(frame_id)
            groups[frame_id] = []
        if all(c == "" for c in coords):
            continue
        if any(c == "" for c in coords):
            raise MalformedRow("coordinate fields must be all empty or all present", idx)
        try:
            vals = [float(c) for c in coords]
        except ValueError:
            raise MalformedRow(f"non-numeric coordinate in {coords!r}", idx) from None
        try:
            groups[frame_id].append(BoundingBox(*vals))
        except InvalidGeometry as exc:
            raise InvalidGeometry(str(exc), idx) from None
    frames = tuple(FrameAnnotation(fid, tuple(groups[fid])) for fid in order)
    return Corpus(frames, source_path)


def parse_csv_detections(source: TextSource, source_path: str = "") -> Corpus:
    """Parse canonical detection CSV ("frame_id,x,y,w,h,score")."""
    rows, _ = _csv_rows(source)
    _check_csv_header(rows, DETECTION_CSV_HEADER)
    order: list[str] = []
    groups: dict[str, list[Detection]] = {}
    for idx, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 6:
            raise MalformedRow(f"expected 6 fields, got {len(row)}", idx)
        frame_id = row[0]
        if not frame_id:
            raise MalformedRow("empty frame_id", idx)
        fields = [c.strip() for c in row[1:]]
        if frame_id not in groups:
            order.append(frame_id)
            groups[frame_id] = []
        if all(c == "" for c in fields):
            continue
        if any(c == "" for c in fields):
            raise MalformedRow("fields must be all empty or all present", idx)
        try:
            vals = [float(c) for c in fields]
        except ValueError:
            raise MalformedRow(f"non-numeric field in {fields!r}", idx) from None
        try:
            groups[frame_id].append(Detection(BoundingBox(*vals[:4]), vals[4]))
        except InvalidGeometry as exc:
            raise InvalidGeometry(str(exc), idx) from None
    frames = tuple(FrameDetections(fid, tuple(groups[fid])) for fid in order)
    return Corpus(frames, source_path)


def _csv_line(fields: list[str]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(fields)
    return buf.getvalue()


def write_detections(corpus: Corpus, fmt: str = "fddb") -> str:
    """Serialize a detection corpus to its canonical text form."""
    if fmt == "fddb":
        out = []
        for frame in corpus.frames:
            out.append(frame.frame_id + "\n")
            out.append(f"{len(frame.detections)}\n")
            for d in frame.detections:
                b = d.box
                out.append(
                    " ".join(
                        format_real(v) for v in (b.x, b.y, b.w, b.h, d.score)
                    )
                    + "\n"
                )
        return "".join(out)
    if fmt == "csv":
        out = [_csv_line(DETECTION_CSV_HEADER)]
        for frame in corpus.frames:
            if not frame.detections:
                out.append(_csv_line([frame.frame_id, "", "", "", "", ""]))
            for d in frame.detections:
                b = d.box
                out.append(
                    _csv_line(
                        [frame.frame_id]
                        + [format_real(v) for v in (b.x, b.y, b.w, b.h, d.score)]
                    )
                )
        return "".join(out)
    raise ValueError(f"unknown detection format {fmt!r}")


def write_annotations_csv(corpus: Corpus) -> str:
    """Serialize an annotation corpus to canonical CSV."""
    out = [_csv_line(ANNOTATION_CSV_HEADER)]
    for frame in corpus.frames:
        if not frame.ground_truth:
            out.append(_csv_line([frame.frame_id, "", "", "", ""]))
        for b in frame.ground_truth:
            out.append(
                _csv_line([frame.frame_id] + [format_real(v) for v in (b.x, b.y, b.w, b.h)])
            )
    return "".join(out)
