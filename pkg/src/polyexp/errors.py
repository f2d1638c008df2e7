"""Exception types shared across the package."""


class BasisConstructionError(RuntimeError):
    """Orthonormalization did not reach the requested tolerance.

    Carries the measured orthonormality defect so callers can report how
    far the construction fell short.
    """

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class CsvFormatError(ValueError):
    """Malformed CSV input; ``line`` is the 1-based offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UndefinedMetricError(ValueError):
    """A norm-based metric was requested against an identically zero reference."""


class SolverError(RuntimeError):
    """An iterative or direct solve failed to reach its accuracy target."""
