"""Exception hierarchy shared across the package.

Everything raised by the public API derives from :class:`CagetrackError` so
the CLI and the HTTP service can map failures onto exit codes / status codes
uniformly: parse failures carry a line number, config failures carry the
offending key, and contract violations (frame ordering, frame-range checks)
get their own classes.
"""

from __future__ import annotations


class CagetrackError(Exception):
    """Base class for all package errors."""


class ValidationError(CagetrackError):
    """A domain-data invariant was violated."""


class NonFiniteField(ValidationError):
    """A numeric field contains NaN or infinity."""


class NegativeDimension(ValidationError):
    """A box width or height is zero or negative."""


class ScoreSumMismatch(ValidationError):
    """Tag score vector does not sum to 1 within tolerance."""


class EmbeddingDimMismatch(ValidationError):
    """Embedding length differs from the configured stream dimension."""


class ZeroVector(CagetrackError):
    """An embedding with zero norm cannot be normalized."""


class ShapeMismatch(CagetrackError):
    """Two matrices that must share a shape do not."""


class SingularInnovation(CagetrackError):
    """Kalman innovation covariance is not invertible."""


class DegenerateShape(CagetrackError):
    """Kalman state projects to a box with non-positive area."""


class NonMonotonicFrame(CagetrackError):
    """Frames fed to the tracker must strictly increase."""


class FrameRangeMismatch(CagetrackError):
    """Hypotheses cover frames outside the ground-truth range."""


class InvalidConfig(CagetrackError):
    """Simulator scene configuration is out of range."""


class ParseError(CagetrackError):
    """A stream file could not be parsed.

    Attributes:
        line: 1-based line number of the offending record, if known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(CagetrackError):
    """A configuration key or value is invalid.

    Attributes:
        key: the offending dotted key, if known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
