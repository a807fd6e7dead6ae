"""Exception hierarchy shared across the pipeline.

Exit-code mapping in the CLI: UsageError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class PesignalError(Exception):
    """Base class for all pipeline errors."""


class UsageError(PesignalError):
    """Bad command line or configuration file."""


class DataError(PesignalError):
    """Malformed, inconsistent, or insufficient input data."""


class InsufficientHistoryError(DataError):
    """Not enough quarters to standardize, estimate, and predict."""


class NumericalError(PesignalError):
    """Non-finite values encountered during estimation."""
