class GridFeatError(Exception):
    """Base error for every failure the toolkit raises on purpose.

    Attributes:
        exit_code (int): Process exit code the CLI reports for this error.
    """
    exit_code = 3

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(GridFeatError):
    """Unknown key, type mismatch or violated invariant in a run configuration."""
    exit_code = 2


class ShapeError(GridFeatError, ValueError):
    """Tensor extents do not agree with what an operation requires."""


class NonFiniteError(GridFeatError, FloatingPointError):
    """A kernel produced NaN or Inf."""


class FormatError(GridFeatError, ValueError):
    """A binary file (GFWT / GFVQ / netpbm) is malformed or truncated."""


class UnsupportedVersionError(FormatError):
    """A binary file carries a version this build cannot read."""


class LabelError(GridFeatError, ValueError):
    """A class / attribute / answer label or target is out of range."""


class PlacementError(GridFeatError, RuntimeError):
    """Scene generation could not place all objects within its retry budget."""


class PipelineError(GridFeatError, RuntimeError):
    """A pipeline stage failed (e.g. mid-way through a timing run)."""


class TrainingError(GridFeatError, RuntimeError):
    """Training could not run or diverged."""


class InvalidArgumentError(GridFeatError, ValueError):
    """A numeric argument is outside its domain (negative variance, bad threshold)."""


class UnknownOpError(GridFeatError, KeyError):
    """No kernel is registered under the requested op id."""
