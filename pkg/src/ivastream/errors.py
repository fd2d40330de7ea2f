"""Exception types shared across the package."""

from __future__ import annotations


class ContractViolationError(ValueError):
    """An argument violates a documented precondition (shape, range, finiteness)."""


class SingularMatrixError(RuntimeError):
    """A linear solve or inversion hit a (near-)singular matrix.

    ``indices`` lists the offending positions in the batch (frequency bins
    when raised from the separation engine).
    """

    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = tuple(indices)


class DegenerateUpdateError(RuntimeError):
    """A demixing update became degenerate (nonpositive quadratic form or
    a rank-1 update that would make the demixing matrix singular).

    ``context`` carries the offending (source, frequency, ...) indices.
    """

    def __init__(self, message: str, context: tuple = ()):
        super().__init__(message)
        self.context = tuple(context)
