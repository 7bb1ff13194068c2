"""Exception types shared across the package.

CLI exit codes map onto these: ConfigError -> 1, DataError -> 2,
BenchmarkError -> 3. Library misuse raises InvalidInputError.
"""


class FedsvmError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FedsvmError, ValueError):
    """An argument violates a documented precondition."""


class UndefinedMetricError(FedsvmError, ValueError):
    """The requested metric is undefined for the given labels."""


class ConvergenceError(FedsvmError, RuntimeError):
    """An iterative reference solve did not reach its tolerance."""


class ConfigError(FedsvmError):
    """A configuration file is malformed or inconsistent."""


class DataError(FedsvmError):
    """A dataset is missing, malformed, or incompatible."""


class BenchmarkError(FedsvmError):
    """A benchmark assertion failed."""
