"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data ingestion problems with 3, numerical failures with 4.
"""


class RcSpaceError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(RcSpaceError):
    """Invalid configuration: bad keys, mismatched genotype, bad ranges."""

    exit_code = 2


class IngestionError(RcSpaceError):
    """A data file is missing, empty, or unparseable."""

    exit_code = 3


class NumericalError(RcSpaceError):
    """A numerical procedure failed (overflow, non-convergence)."""

    exit_code = 4


class DegenerateRunError(NumericalError):
    """A substrate run produced non-finite or unbounded states.

    Callers measuring behaviour map this to the degenerate behaviour
    point (0, 0, 0); task evaluation maps it to the worst-case error
    sentinel.
    """
