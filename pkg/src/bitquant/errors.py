"""Exception types shared across the package."""

from __future__ import annotations


class TensorFileError(Exception):
    """Base class for problems with serialized tensor files."""


class MalformedHeaderError(TensorFileError):
    """File header or structure does not match the declared format."""


class DimensionOverflowError(TensorFileError):
    """Declared dimensions promise more data than the file can hold."""


class NonFiniteValueError(TensorFileError):
    """A NaN or infinity was found where only finite values are allowed."""


class ConvergenceError(Exception):
    """An iterative solver ran out of iterations before meeting its tolerance.

    The best iterate seen so far is attached as ``partial`` so callers can
    inspect or salvage it.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
