"""End-to-end orchestration: frame ingest, adapter subprocesses with a
file-based batch protocol, cached detection runs, evaluation reports, and
deterministic SVG overlay/plot rendering."""

from __future__ import annotations

import hashlib
import os
import re
import shlex
import struct
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .errors import (
    AdapterFailed,
    AdapterOutputMalformed,
    ExtractorFailed,
    FacebenchError,
    NoFramesProduced,
    OutputUnwritable,
)
from .formats import Corpus, FrameDetections, format_real, parse_csv_detections
from .matching import MODE_BEST_OVERLAP, MODE_STRICT, match_corpus
from .metrics import PrResult, RocCurve, precision_recall

DEFAULT_IOU_THRESHOLDS = (0.5, 0.75)

_FRAME_FILE_RE = re.compile(r"^frame_(\d{6})\.[A-Za-z0-9]+$")


@dataclass(frozen=True)
class AdapterConfig:
    """External detector description: a command template with {manifest}
    and {output} placeholders, each required exactly once."""

    name: str
    command_template: str
    working_dir: str = "."
    timeout: float = 600.0
    env: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("adapter name must be non-empty")
        for placeholder in ("{manifest}", "{output}"):
            if self.command_template.count(placeholder) != 1:
                raise ValueError(
                    f"command template must contain {placeholder} exactly once"
                )
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class RunManifest:
    """Ordered (frame_id, image_path) pairs; paths relative to corpus_root."""

    frames: tuple[tuple[str, str], ...]
    corpus_root: str = "."

    def __post_init__(self):
        ids = [fid for fid, _ in self.frames]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest frame_ids must be unique")

    def to_text(self) -> str:
        return "".join(f"{fid}\t{path}\n" for fid, path in self.frames)

    @classmethod
    def from_text(cls, text: str, corpus_root: str = ".") -> "RunManifest":
        frames = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise ValueError(f"manifest line {lineno}: expected 'frame_id<TAB>path'")
            frames.append((parts[0], parts[1]))
        return cls(tuple(frames), corpus_root)


@dataclass(frozen=True)
class EvaluationConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS
    score_threshold: float | None = None
    matching_mode: str = MODE_STRICT

    def __post_init__(self):
        if not self.iou_thresholds:
            raise ValueError("at least one IOU threshold required")
        prev = 0.0
        for t in self.iou_thresholds:
            if not (0.0 < t <= 1.0) or t <= prev:
                raise ValueError(
                    "iou_thresholds must be strictly increasing values in (0, 1]"
                )
            prev = t
        if self.matching_mode not in (MODE_STRICT, MODE_BEST_OVERLAP):
            raise ValueError(f"unknown matching mode {self.matching_mode!r}")


@dataclass(frozen=True)
class EvaluationReport:
    """Per-threshold pooled results plus diagnostics and the config used."""

    results: tuple[PrResult, ...]
    config: EvaluationConfig
    frames_evaluated: int
    unannotated_frames: tuple[str, ...]
    unannotated_detections: int


@dataclass(frozen=True)
class AdapterRunResult:
    corpus: Corpus
    missing_frames: tuple[str, ...]
    from_cache: bool


def ingest_frames(
    video_path: str,
    extractor_command: str,
    output_dir: str,
    fps: float | None = None,
    reuse: bool = False,
) -> RunManifest:
    """Run an external frame extractor and build a manifest of its output.

    The extractor command must contain {input}, {outdir} and {pattern}
    placeholders; produced files must match the pattern frame_%06d.<ext>.
    With reuse=True an already-populated output directory skips the
    extractor entirely.
    """
    out = Path(output_dir)
    if not (reuse and _scan_frames(out)):
        if not Path(video_path).exists():
            raise ExtractorFailed(f"video file not found: {video_path}")
        for placeholder in ("{input}", "{outdir}", "{pattern}"):
            if placeholder not in extractor_command:
                raise ValueError(f"extractor command missing {placeholder}")
        out.mkdir(parents=True, exist_ok=True)
        command = (
            extractor_command.replace("{input}", shlex.quote(video_path))
            .replace("{outdir}", shlex.quote(str(out)))
            .replace("{pattern}", "frame_%06d")
        )
        if fps is not None:
            command = command.replace("{fps}", format_real(fps))
        proc = subprocess.run(
            shlex.split(command), capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise ExtractorFailed(
                f"extractor exited with code {proc.returncode}",
                exit_code=proc.returncode,
                diagnostics=proc.stderr,
            )
    entries = _scan_frames(out)
    if not entries:
        raise NoFramesProduced(f"no frame_%06d files in {output_dir}")
    return RunManifest(tuple(entries), corpus_root=str(out))


def _scan_frames(directory: Path) -> list[tuple[str, str]]:
    if not directory.is_dir():
        return []
    found = []
    for name in os.listdir(directory):
        m = _FRAME_FILE_RE.match(name)
        if m:
            found.append((int(m.group(1)), m.group(1), name))
    found.sort()
    return [(fid, name) for _, fid, name in found]


def manifest_digest(manifest: RunManifest) -> str:
    return hashlib.sha256(manifest.to_text().encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_adapter(
    config: AdapterConfig,
    manifest: RunManifest,
    cache_dir: str,
    no_cache: bool = False,
    launcher: Callable[..., subprocess.CompletedProcess] | None = None,
) -> AdapterRunResult:
    """Invoke a detector adapter over a manifest, with content-digest caching.

    The manifest is written as a text file, substituted into the adapter
    command along with an output path, and the output is parsed as
    canonical detection CSV. A warm cache (keyed by adapter name and
    manifest digest) skips the process launch. Manifest frames the adapter
    omitted are reported and treated as zero detections.

    ``launcher`` replaces subprocess.run in tests.
    """
    if not manifest.frames:
        raise ValueError("manifest is empty")
    cache_path = Path(cache_dir) / config.name / f"{manifest_digest(manifest)}.csv"
    from_cache = False
    if not no_cache and cache_path.exists():
        raw = cache_path.read_text(encoding="utf-8")
        from_cache = True
    else:
        raw = _launch_adapter(config, manifest, launcher or subprocess.run)
        _atomic_write(cache_path, raw)
    try:
        corpus = parse_csv_detections(raw, source_path=str(cache_path))
    except FacebenchError as exc:
        raise AdapterOutputMalformed(f"adapter {config.name!r}: {exc}") from exc
    known = corpus.by_id()
    missing = tuple(fid for fid, _ in manifest.frames if fid not in known)
    if missing:
        frames = list(corpus.frames) + [FrameDetections(fid, ()) for fid in missing]
        corpus = Corpus(tuple(frames), corpus.source_path)
    return AdapterRunResult(corpus, missing, from_cache)


def _launch_adapter(config: AdapterConfig, manifest: RunManifest, launch) -> str:
    with tempfile.TemporaryDirectory(prefix="facebench-adapter-") as tmp:
        manifest_path = Path(tmp) / "manifest.tsv"
        output_path = Path(tmp) / "detections.csv"
        # adapters see image paths resolved against corpus_root; the cache
        # digest stays keyed on the relative-path manifest text
        root = Path(manifest.corpus_root).resolve()
        resolved = "".join(
            f"{fid}\t{root / path}\n" for fid, path in manifest.frames
        )
        manifest_path.write_text(resolved, encoding="utf-8")
        command = config.command_template.replace(
            "{manifest}", shlex.quote(str(manifest_path))
        ).replace("{output}", shlex.quote(str(output_path)))
        env = dict(os.environ)
        env.update(dict(config.env))
        try:
            proc = launch(
                shlex.split(command),
                cwd=config.working_dir,
                env=env,
                capture_output=True,
                text=True,
                timeout=config.timeout,
            )
        except subprocess.TimeoutExpired as exc:
            stderr = exc.stderr
            if isinstance(stderr, bytes):
                stderr = stderr.decode("utf-8", "replace")
            raise AdapterFailed(
                f"adapter {config.name!r} timed out after {config.timeout}s",
                diagnostics=stderr or "",
            ) from None
        if proc.returncode != 0:
            raise AdapterFailed(
                f"adapter {config.name!r} exited with code {proc.returncode}",
                exit_code=proc.returncode,
                diagnostics=proc.stderr,
            )
        if not output_path.exists():
            raise AdapterFailed(
                f"adapter {config.name!r} wrote no output file", diagnostics=proc.stderr
            )
        return output_path.read_text(encoding="utf-8")


def evaluate(gts: Corpus, dets: Corpus, cfg: EvaluationConfig) -> EvaluationReport:
    """Match and score the corpus at every configured IOU threshold."""
    results = []
    unannotated: tuple[str, ...] = ()
    n_ignored = 0
    for threshold in cfg.iou_thresholds:
        match = match_corpus(
            dets, gts, threshold, cfg.score_threshold, cfg.matching_mode
        )
        results.append(precision_recall(match.outcomes))
        unannotated = match.unannotated_frames
        n_ignored = match.unannotated_detections
    return EvaluationReport(
        results=tuple(results),
        config=cfg,
        frames_evaluated=len(gts.frames),
        unannotated_frames=unannotated,
        unannotated_detections=n_ignored,
    )


def report_table(report: EvaluationReport, video_id: str = "all") -> str:
    """Human-readable report table."""
    lines = [
        f"video: {video_id}   frames evaluated: {report.frames_evaluated}",
        f"score threshold: "
        + (
            format_real(report.config.score_threshold)
            if report.config.score_threshold is not None
            else "none"
        )
        + f"   matching mode: {report.config.matching_mode}",
        "",
        f"{'IOU':>6} {'TP':>8} {'FP':>8} {'FN':>8} {'Precision':>10} {'Recall':>10}",
    ]
    for r in report.results:
        lines.append(
            f"{r.iou_threshold:>6.2f} {r.tp:>8d} {r.fp:>8d} {r.fn:>8d}"
            f" {r.precision:>10.4f} {r.recall:>10.4f}"
        )
    if report.unannotated_frames:
        lines.append("")
        lines.append(
            f"excluded from scoring: {report.unannotated_detections} detections in "
            f"{len(report.unannotated_frames)} unannotated frames"
        )
    return "\n".join(lines) + "\n"


def report_csv(report: EvaluationReport, video_id: str = "all") -> str:
    """Machine-readable rows: video_id,iou_threshold,tp,fp,fn,precision,recall."""
    lines = ["video_id,iou_threshold,tp,fp,fn,precision,recall"]
    for r in report.results:
        lines.append(
            ",".join(
                [
                    video_id,
                    format_real(r.iou_threshold),
                    str(r.tp),
                    str(r.fp),
                    str(r.fn),
                    format_real(r.precision),
                    format_real(r.recall),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _image_size(path: Path) -> tuple[int, int] | None:
    """Read PNG/JPEG pixel dimensions from the file header, no decoding."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(26)
            if head[:8] == b"\x89PNG\r\n\x1a\n" and head[12:16] == b"IHDR":
                w, h = struct.unpack(">II", head[16:24])
                return int(w), int(h)
            if head[:2] == b"\xff\xd8":
                fh.seek(2)
                while True:
                    marker = fh.read(2)
                    if len(marker) < 2 or marker[0] != 0xFF:
                        return None
                    if 0xC0 <= marker[1] <= 0xCF and marker[1] not in (0xC4, 0xC8, 0xCC):
                        fh.read(3)
                        h, w = struct.unpack(">HH", fh.read(4))
                        return int(w), int(h)
                    (length,) = struct.unpack(">H", fh.read(2))
                    fh.seek(length - 2, os.SEEK_CUR)
    except OSError:
        return None
    return None


def _fmt_coord(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _overlay_svg(
    image_rel: str, size: tuple[int, int], gt_boxes, det_list
) -> str:
    w, h = size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n',
        f'  <image xlink:href="{image_rel}" x="0" y="0" width="{w}" height="{h}"/>\n',
    ]
    for b in gt_boxes:
        parts.append(
            f'  <rect x="{_fmt_coord(b.x)}" y="{_fmt_coord(b.y)}" '
            f'width="{_fmt_coord(b.w)}" height="{_fmt_coord(b.h)}" '
            'fill="none" stroke="red" stroke-width="2"/>\n'
        )
    for d in det_list:
        b = d.box
        parts.append(
            f'  <rect x="{_fmt_coord(b.x)}" y="{_fmt_coord(b.y)}" '
            f'width="{_fmt_coord(b.w)}" height="{_fmt_coord(b.h)}" '
            'fill="none" stroke="green" stroke-width="2"/>\n'
        )
        parts.append(
            f'  <text x="{_fmt_coord(b.x)}" y="{_fmt_coord(max(b.y - 4.0, 10.0))}" '
            f'fill="green" font-size="12" font-family="monospace">{format_real(d.score)}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def render_overlays(
    manifest: RunManifest,
    gts: Corpus,
    dets: Corpus,
    out_dir: str,
    workers: int = 1,
) -> int:
    """Write one SVG overlay per manifest frame: the source image by
    reference, ground truth stroked red, detections stroked green with
    their scores. Returns the number of files written."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputUnwritable(f"cannot create {out_dir}: {exc}") from exc
    gt_by_id = gts.by_id()
    det_by_id = dets.by_id()
    root = Path(manifest.corpus_root)

    def render_one(entry: tuple[str, str]) -> None:
        frame_id, image_rel = entry
        gt_frame = gt_by_id.get(frame_id)
        det_frame = det_by_id.get(frame_id)
        gt_boxes = list(gt_frame.ground_truth) if gt_frame else []
        det_list = list(det_frame.detections) if det_frame else []
        size = _image_size(root / image_rel)
        if size is None:
            extent_x = max([b.x2 for b in gt_boxes] + [d.box.x2 for d in det_list] + [640.0])
            extent_y = max([b.y2 for b in gt_boxes] + [d.box.y2 for d in det_list] + [480.0])
            size = (int(extent_x + 0.5), int(extent_y + 0.5))
        svg = _overlay_svg(image_rel, size, gt_boxes, det_list)
        safe_name = re.sub(r"[^A-Za-z0-9._-]", "_", frame_id)
        try:
            _atomic_write(out / f"{safe_name}.svg", svg)
        except OSError as exc:
            raise OutputUnwritable(f"cannot write overlay for {frame_id}: {exc}") from exc

    if workers <= 1:
        for entry in manifest.frames:
            render_one(entry)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(render_one, manifest.frames))
    return len(manifest.frames)


_PLOT_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_PLOT_W, _PLOT_H = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 20, 50


def plot_roc(curves: Sequence[tuple[str, RocCurve]], out_path: str) -> None:
    """Render labeled ROC polylines (x: total false positives, y: TPR) to a
    single deterministic SVG file."""
    if not curves:
        raise ValueError("at least one curve required")
    max_fp = max([p[1] for _, c in curves for p in c.points] + [1])
    inner_w = _PLOT_W - _MARGIN_L - _MARGIN_R
    inner_h = _PLOT_H - _MARGIN_T - _MARGIN_B

    def px(fp: float) -> float:
        return _MARGIN_L + inner_w * fp / max_fp

    def py(tpr: float) -> float:
        return _MARGIN_T + inner_h * (1.0 - tpr)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PLOT_W}" height="{_PLOT_H}" '
        f'viewBox="0 0 {_PLOT_W} {_PLOT_H}">\n',
        f'  <rect x="0" y="0" width="{_PLOT_W}" height="{_PLOT_H}" fill="white"/>\n',
        f'  <rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{inner_w}" height="{inner_h}" '
        'fill="none" stroke="black"/>\n',
    ]
    for i in range(6):
        tpr = i / 5.0
        y = _fmt_coord(py(tpr))
        parts.append(
            f'  <line x1="{_MARGIN_L - 4}" y1="{y}" x2="{_MARGIN_L}" y2="{y}" stroke="black"/>\n'
            f'  <text x="{_MARGIN_L - 8}" y="{y}" text-anchor="end" dominant-baseline="middle" '
            f'font-size="11" font-family="monospace">{tpr:.1f}</text>\n'
        )
        fp = round(max_fp * i / 5)
        x = _fmt_coord(px(max_fp * i / 5))
        y0 = _MARGIN_T + inner_h
        parts.append(
            f'  <line x1="{x}" y1="{y0}" x2="{x}" y2="{y0 + 4}" stroke="black"/>\n'
            f'  <text x="{x}" y="{y0 + 16}" text-anchor="middle" font-size="11" '
            f'font-family="monospace">{fp}</text>\n'
        )
    parts.append(
        f'  <text x="{_MARGIN_L + inner_w // 2}" y="{_PLOT_H - 12}" text-anchor="middle" '
        'font-size="12" font-family="monospace">total false positives</text>\n'
        f'  <text x="16" y="{_MARGIN_T + inner_h // 2}" text-anchor="middle" font-size="12" '
        f'font-family="monospace" transform="rotate(-90 16 {_MARGIN_T + inner_h // 2})">'
        "true positive rate</text>\n"
    )
    for i, (label, curve) in enumerate(curves):
        color = _PLOT_COLORS[i % len(_PLOT_COLORS)]
        pts = " ".join(f"{_fmt_coord(px(fp))},{_fmt_coord(py(tpr))}" for _, fp, tpr in curve.points)
        if pts:
            parts.append(
                f'  <polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>\n'
            )
        ly = _MARGIN_T + 16 + 16 * i
        parts.append(
            f'  <line x1="{_MARGIN_L + 10}" y1="{ly - 4}" x2="{_MARGIN_L + 30}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>\n'
            f'  <text x="{_MARGIN_L + 36}" y="{ly}" font-size="12" '
            f'font-family="monospace">{label}</text>\n'
        )
    parts.append("</svg>\n")
    try:
        _atomic_write(Path(out_path), "".join(parts))
    except OSError as exc:
        raise OutputUnwritable(f"cannot write {out_path}: {exc}") from exc
