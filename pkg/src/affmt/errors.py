"""Exception types shared across the package."""


class AffmtError(Exception):
    """Base class for all package errors."""


class ValidationError(AffmtError):
    """Input violates a documented precondition or value range."""


class ParseError(AffmtError):
    """Malformed annotation data.

    line_number is 1-based and refers to the offending line of the
    JSON-lines stream.
    """

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class InfeasibleSplitError(AffmtError):
    """The subject-independence constraint cannot be satisfied."""


class NotFoundError(AffmtError):
    """Requested video/annotator/frame does not exist."""


class VersionConflictError(AffmtError):
    """Optimistic-concurrency write with a stale expected version."""

    def __init__(self, expected, actual):
        super().__init__(
            f"expected version {expected} but store is at version {actual}"
        )
        self.expected = expected
        self.actual = actual


class StorageError(AffmtError):
    """The annotation store is unreadable or inconsistent."""


class ConfigurationError(AffmtError):
    """Model or training configuration is internally inconsistent."""


class ShapeError(AffmtError):
    """Layer shapes in a model spec do not compose."""


class TrainingDiverged(AffmtError):
    """A training step produced a non-finite loss."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CheckpointError(AffmtError):
    """Checkpoint cannot be read, or does not match the config."""


class UndefinedMetricError(AffmtError):
    """Metric is undefined for the given input (e.g. empty)."""
