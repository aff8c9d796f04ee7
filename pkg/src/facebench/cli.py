"""Command-line entry point: one-line commands over the pipeline.

Exit codes: 0 success, 1 validation error (bad flags, missing or malformed
input files), 2 runtime failure (adapter/extractor/output errors).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import formats, metrics, pipeline
from .errors import (
    AdapterFailed,
    AdapterOutputMalformed,
    EmptyGroundTruth,
    ExtractorFailed,
    FacebenchError,
    InvalidGeometry,
    MixedThreshold,
    NoFramesProduced,
    OutputUnwritable,
    ParseError,
)
from .matching import MODE_BEST_OVERLAP, MODE_STRICT

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_VALIDATION_ERRORS = (ParseError, InvalidGeometry, EmptyGroundTruth, MixedThreshold, ValueError)
_RUNTIME_ERRORS = (
    AdapterFailed,
    AdapterOutputMalformed,
    ExtractorFailed,
    NoFramesProduced,
    OutputUnwritable,
)


class _ValidationExit(Exception):
    """Raised by the argument parser instead of SystemExit(2)."""

    def __init__(self, message: str):
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ValidationExit(f"{self.prog}: error: {message}")


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise _ValidationExit(f"input file not found: {path}")
    return p.read_text(encoding="utf-8")


def _write_text(path: str, data: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(data, encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputUnwritable(f"cannot write {path}: {exc}") from exc


def _sniff_annotations(path: str) -> formats.Corpus:
    text = _read_text(path)
    first = text.splitlines()[0].strip() if text.splitlines() else ""
    if [c.strip() for c in first.split(",")] == formats.ANNOTATION_CSV_HEADER:
        return formats.parse_csv_annotations(text, path)
    return formats.parse_fddb_annotations(text, path)


def _sniff_detections(path: str) -> formats.Corpus:
    text = _read_text(path)
    first = text.splitlines()[0].strip() if text.splitlines() else ""
    if [c.strip() for c in first.split(",")] == formats.DETECTION_CSV_HEADER:
        return formats.parse_csv_detections(text, path)
    return formats.parse_fddb_detections(text, path)


def load_adapter_config(path: str) -> pipeline.AdapterConfig:
    """Parse the key=value adapter config file (name, command, workdir,
    timeout_seconds, env.NAME entries)."""
    fields: dict[str, str] = {}
    env: list[tuple[str, str]] = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _ValidationExit(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key.startswith("env."):
            env.append((key[4:], value))
        else:
            fields[key] = value
    if "name" not in fields or "command" not in fields:
        raise _ValidationExit(f"{path}: adapter config requires 'name' and 'command'")
    try:
        return pipeline.AdapterConfig(
            name=fields["name"],
            command_template=fields["command"],
            working_dir=fields.get("workdir", "."),
            timeout=float(fields.get("timeout_seconds", "600")),
            env=tuple(env),
        )
    except ValueError as exc:
        raise _ValidationExit(f"{path}: {exc}") from exc


def _load_manifest(path: str, corpus_root: str | None) -> pipeline.RunManifest:
    root = corpus_root if corpus_root is not None else str(Path(path).parent)
    try:
        return pipeline.RunManifest.from_text(_read_text(path), root)
    except ValueError as exc:
        raise _ValidationExit(f"{path}: {exc}") from exc


def _cmd_detect(args) -> int:
    config = load_adapter_config(args.adapter)
    manifest = _load_manifest(args.manifest, args.corpus_root)
    result = pipeline.run_adapter(
        config, manifest, args.cache, no_cache=args.no_cache
    )
    _write_text(args.out, formats.write_detections(result.corpus, "csv"))
    n_dets = sum(len(f.detections) for f in result.corpus.frames)
    origin = "cache" if result.from_cache else "adapter"
    print(
        f"{len(manifest.frames)} frames processed, {n_dets} detections emitted ({origin})"
    )
    if result.missing_frames:
        print(
            f"warning: adapter omitted {len(result.missing_frames)} frames: "
            + ", ".join(result.missing_frames),
            file=sys.stderr,
        )
    return EXIT_OK


def _parse_iou_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise _ValidationExit(f"bad --iou list {text!r}") from None


def _cmd_evaluate(args) -> int:
    gts = _sniff_annotations(args.gt)
    dets = _sniff_detections(args.det)
    try:
        cfg = pipeline.EvaluationConfig(
            iou_thresholds=_parse_iou_list(args.iou),
            score_threshold=args.score_threshold,
            matching_mode=args.mode,
        )
    except ValueError as exc:
        raise _ValidationExit(str(exc)) from exc
    report = pipeline.evaluate(gts, dets, cfg)
    _write_text(args.out + ".txt", pipeline.report_table(report))
    _write_text(args.out + ".csv", pipeline.report_csv(report))
    for r in report.results:
        print(
            f"IOU {r.iou_threshold:g}: precision {r.precision:.4f} recall {r.recall:.4f}"
            f" (tp={r.tp} fp={r.fp} fn={r.fn})"
        )
    return EXIT_OK


def _cmd_roc(args) -> int:
    gts = _sniff_annotations(args.gt)
    det_paths = args.det or []
    if not det_paths:
        raise _ValidationExit("at least one --det file required")
    labels = args.label or []
    if labels and len(labels) != len(det_paths):
        raise _ValidationExit("--label count must match --det count")
    if not labels:
        labels = [Path(p).stem for p in det_paths]
    curves = []
    for label, path in zip(labels, det_paths):
        dets = _sniff_detections(path)
        curves.append((label, metrics.roc_curve(dets, gts)))
    pipeline.plot_roc(curves, args.out)
    if args.csv:
        lines = ["label,score_threshold,false_positives,true_positive_rate"]
        for label, curve in curves:
            for threshold, fp, tpr in curve.points:
                lines.append(
                    f"{label},{formats.format_real(threshold)},{fp},{formats.format_real(tpr)}"
                )
        _write_text(args.csv, "\n".join(lines) + "\n")
    print(f"{len(curves)} curve(s) written to {args.out}")
    return EXIT_OK


def _cmd_overlay(args) -> int:
    manifest = _load_manifest(args.manifest, args.corpus_root)
    gts = _sniff_annotations(args.gt)
    dets = _sniff_detections(args.det)
    n = pipeline.render_overlays(manifest, gts, dets, args.out_dir, workers=args.workers)
    print(f"{n} overlay file(s) written to {args.out_dir}")
    return EXIT_OK


def _cmd_convert(args) -> int:
    text = _read_text(args.infile)
    lossy = False
    if args.src == "fddb-ann" and args.dst == "csv":
        corpus = formats.parse_fddb_annotations(text, args.infile)
        out = formats.write_annotations_csv(corpus)
        lossy = True
    elif args.src == "fddb-det" and args.dst == "csv":
        corpus = formats.parse_fddb_detections(text, args.infile)
        out = formats.write_detections(corpus, "csv")
    elif args.src == "csv" and args.dst == "fddb-det":
        corpus = formats.parse_csv_detections(text, args.infile)
        out = formats.write_detections(corpus, "fddb")
    else:
        raise _ValidationExit(f"unsupported conversion {args.src} -> {args.dst}")
    _write_text(args.out, out)
    note = " (ellipse to box conversion is lossy)" if lossy else ""
    print(f"converted {len(corpus.frames)} frames{note}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    manifest = pipeline.ingest_frames(
        args.video, args.extractor, args.out_dir, fps=args.fps, reuse=args.reuse
    )
    _write_text(args.manifest_out, manifest.to_text())
    print(f"{len(manifest.frames)} frames -> {args.manifest_out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="facebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="run a detector adapter over a manifest")
    p.add_argument("--adapter", required=True, help="adapter config file (key=value)")
    p.add_argument("--manifest", required=True, help="manifest file (frame_id<TAB>path)")
    p.add_argument("--out", required=True, help="output detection CSV path")
    p.add_argument("--cache", default=str(Path.home() / ".cache" / "facebench"))
    p.add_argument("--no-cache", action="store_true", help="force a fresh adapter run")
    p.add_argument("--corpus-root", default=None)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("evaluate", help="score detections against ground truth")
    p.add_argument("--gt", required=True, help="annotation file (FDDB or CSV)")
    p.add_argument("--det", required=True, help="detection file (FDDB or CSV)")
    p.add_argument("--iou", default="0.5,0.75", help="comma-separated IOU thresholds")
    p.add_argument("--score-threshold", type=float, default=None)
    p.add_argument("--mode", choices=[MODE_STRICT, MODE_BEST_OVERLAP], default=MODE_STRICT)
    p.add_argument("--out", required=True, help="report path prefix (.txt and .csv)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("roc", help="plot FDDB-style ROC curves")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", action="append", help="detection file (repeatable)")
    p.add_argument("--label", action="append", help="curve label (one per --det)")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--csv", default=None, help="optional CSV of curve points")
    p.set_defaults(func=_cmd_roc)

    p = sub.add_parser("overlay", help="render per-frame SVG overlays")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--det", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--corpus-root", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("convert", help="convert between corpus file formats")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--from", dest="src", required=True, choices=["fddb-ann", "fddb-det", "csv"])
    p.add_argument("--to", dest="dst", required=True, choices=["csv", "fddb-det"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("ingest", help="extract video frames and build a manifest")
    p.add_argument("--video", required=True)
    p.add_argument(
        "--extractor",
        required=True,
        help="extractor command with {input} {outdir} {pattern} placeholders",
    )
    p.add_argument("--out-dir", required=True)
    p.add_argument("--manifest-out", required=True)
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--reuse", action="store_true")
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _ValidationExit as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        diagnostics = getattr(exc, "diagnostics", "")
        if diagnostics:
            print(diagnostics.rstrip(), file=sys.stderr)
        return EXIT_RUNTIME
    except FacebenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
