"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific type that applies.
"""


class FairRepairError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FairRepairError):
    """A configuration value or combination of values is invalid."""


class DataError(FairRepairError):
    """Input data is malformed or unusable (bad files, impossible requests)."""


class NumericalError(FairRepairError):
    """A solver failed to make progress or produced a divergent result."""


class UndefinedMetricError(FairRepairError):
    """A metric is undefined for the given inputs (e.g. empty conditioning cell)."""
