"""Exception hierarchy.

Every failure the library raises on purpose derives from EpdError so callers
(and the CLI, which maps them to exit code 1) can catch one type. The pipeline
stamps `stage` on errors that cross a stage boundary.
"""

from __future__ import annotations


class EpdError(Exception):
    """Base class for all domain errors."""

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        base = super().__str__()
        if self.stage:
            return f"[stage={self.stage}] {base}"
        return base


class InvalidGeometryError(EpdError):
    """Degenerate or non-finite geometric input (zero-area box, bad dims)."""


class InvalidParameterError(EpdError):
    """Configuration value outside its documented domain."""


class OutOfRegionError(EpdError):
    """A point fell outside the region an operation requires it in."""


class InsufficientDataError(EpdError):
    """Too few path vertices to compute a derived profile."""


class InsufficientSamplesError(EpdError):
    """Adaptive sampling could not produce the required sample count."""


class ProtocolError(EpdError):
    """Token-probability payload violates the wire contract."""


class OracleUnavailableError(EpdError):
    """Remote oracle unreachable or persistently malformed after retry."""


class InsufficientEvidenceError(EpdError):
    """Verification exhausted its query budget before meeting targets.

    Carries whatever was gathered so callers can inspect partial results.
    """

    def __init__(self, message: str, *, accepted=None, trace=None, stage: str | None = None):
        super().__init__(message, stage=stage)
        self.accepted = list(accepted) if accepted is not None else []
        self.trace = list(trace) if trace is not None else []
