"""Shared exception types."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result
    (eigensolver non-convergence, singular hitting-time system, ...)."""
