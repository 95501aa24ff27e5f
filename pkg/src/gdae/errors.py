"""Exception types raised across the package."""


class GdaeError(Exception):
    """Base class for all package errors."""


class SampleKindError(GdaeError, TypeError):
    """A sample's variant does not match what the model or process expects."""


class ErgodicityError(GdaeError):
    """A transition operator is not strictly positive (or leaks mass)."""


class ConvergenceError(GdaeError):
    """An iterative routine hit its iteration cap."""


class FormatError(GdaeError, ValueError):
    """Malformed file: IDX, PGM, CSV or model file."""


class ConfigError(GdaeError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class TrainingError(GdaeError):
    """Training produced a non-finite loss."""
