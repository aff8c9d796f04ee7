"""Exception hierarchy shared across the harness."""

from __future__ import annotations


class FacebenchError(Exception):
    """Base class for all harness errors."""


class InvalidGeometry(FacebenchError):
    """Degenerate or non-finite geometry (zero-area box, NaN field)."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ParseError(FacebenchError):
    """Structured parse failure carrying the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class MalformedBlock(ParseError):
    """FDDB block structure violated (bad count line, short block, bad field)."""


class MalformedRow(ParseError):
    """CSV row with wrong arity or non-numeric field."""


class DuplicateFrame(ParseError):
    """The same frame_id appeared twice within one corpus."""


class MixedThreshold(FacebenchError):
    """Aggregation over outcomes computed at different IOU thresholds."""


class EmptyGroundTruth(FacebenchError):
    """ROC sweep requested over a corpus with no ground-truth boxes."""


class ExtractorFailed(FacebenchError):
    """Frame extractor exited nonzero."""

    def __init__(self, message: str, exit_code: int | None = None, diagnostics: str = ""):
        self.exit_code = exit_code
        self.diagnostics = diagnostics
        super().__init__(message)


class NoFramesProduced(FacebenchError):
    """Frame extractor succeeded but produced no frames."""


class AdapterFailed(FacebenchError):
    """External detector adapter exited nonzero or timed out."""

    def __init__(self, message: str, exit_code: int | None = None, diagnostics: str = ""):
        self.exit_code = exit_code
        self.diagnostics = diagnostics
        super().__init__(message)


class AdapterOutputMalformed(FacebenchError):
    """Adapter produced output the canonical CSV parser rejects."""


class OutputUnwritable(FacebenchError):
    """Destination path for a rendered artifact cannot be written."""
