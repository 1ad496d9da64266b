"""Exception types raised across the package."""


class SizeError(ValueError):
    """Requested register or structure size is out of the supported range."""


class ShapeError(ValueError):
    """Array dimensions do not line up."""


class DataError(ValueError):
    """A dataset file could not be parsed.

    ``line`` is the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(ValueError):
    """Not enough samples to perform the requested operation."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss


class UsageError(RuntimeError):
    """An API was called in an inconsistent way (e.g. a missing dropout mask)."""
