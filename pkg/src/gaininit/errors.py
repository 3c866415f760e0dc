"""Exception hierarchy.

Each family carries the CLI exit code it maps to, so the driver can translate
any failure without a lookup table.
"""


class GainInitError(Exception):
    exit_code = 1


class ConfigError(GainInitError, ValueError):
    exit_code = 2


class FormatError(GainInitError):
    """Bad magic, bad version, or a structurally invalid file."""

    exit_code = 3


class CorruptionError(FormatError):
    """Payload shorter than its headers promise."""


class DataError(GainInitError, ValueError):
    """Non-finite samples or otherwise unusable values in the data."""

    exit_code = 3


class StabilityError(GainInitError):
    exit_code = 4

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class DegenerateError(GainInitError, ArithmeticError):
    """Numerical degeneracy: nothing admissible to estimate, weight or divide by."""

    exit_code = 5


class SingularityError(GainInitError, ValueError):
    """Coincident points where a Green's function is singular."""

    exit_code = 5


class DomainError(GainInitError, ValueError):
    exit_code = 2
