"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (see ``cli.py``), so new error
types should subclass one of the three categories below.
"""


class SindykitError(Exception):
    """Base class for all package errors."""


class ConfigError(SindykitError):
    """Invalid configuration: bad field values, inconsistent sub-configs."""


class DataError(SindykitError):
    """Input data violates an operation's contract (shape, finiteness,
    missing derivatives, too few samples)."""


class NumericalError(SindykitError):
    """A numerical procedure failed (step-size underflow, divergence)."""
