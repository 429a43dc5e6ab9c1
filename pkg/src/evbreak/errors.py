"""Exception types shared across the package.

The command line maps these onto exit codes: usage problems are handled by
argparse, :class:`DataError` exits with 2 and :class:`NumericError` with 3.
"""

__all__ = ["EvbreakError", "DataError", "NumericError", "ConfigError"]


class EvbreakError(Exception):
    """Base class for errors raised by this package."""


class DataError(EvbreakError):
    """Input data is malformed or insufficient (bad shapes, too few rows)."""


class NumericError(EvbreakError):
    """A numeric routine failed to produce a usable result."""


class ConfigError(DataError):
    """An experiment or CLI configuration file is invalid."""
