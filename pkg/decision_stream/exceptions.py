"""
Exception hierarchy shared by the library and the command line.
"""


class DecisionStreamError(Exception):
    """Root of every error raised by the package."""


class DataError(DecisionStreamError, ValueError):
    """Bad input data: unreadable files, schema violations, label problems."""


class SchemaMismatchError(DataError):
    pass


class ModelFormatError(DataError):
    """A model or ensemble document that cannot be decoded."""


class ConfigError(DecisionStreamError, ValueError):
    pass


class UsageError(DecisionStreamError):
    pass


class InvariantViolation(DecisionStreamError):
    """A graph failed its structural contract."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invariant violation")
