"""Exception hierarchy shared by the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class PeakShavingError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PeakShavingError):
    """Invalid run configuration (bad schema, unknown keys, bad values)."""


class DataError(PeakShavingError):
    """Malformed or inconsistent input data (CSV parsing, gaps, duplicates)."""


class NumericalError(PeakShavingError):
    """Solver failure, non-convergence, or infeasible numerical problem."""
