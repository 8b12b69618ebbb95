"""Exception types shared across the package."""


class FtspanError(Exception):
    """Base class for all package errors."""


class InputError(FtspanError, ValueError):
    """Malformed or inconsistent input (files, point sets, flag combinations)."""


class DegenerateMetricError(InputError):
    """Duplicate points / zero pairwise distance."""


class BudgetError(FtspanError):
    """A combinatorial budget (exhaustive enumeration, oracle size) was exceeded."""


class GuaranteeError(FtspanError):
    """A construction guarantee was violated in faithful mode (mis-tuned constants)."""
