"""Exception hierarchy for the laboratory."""


class ESGLabError(Exception):
    """Base class for domain errors (mapped to exit code 1 by the CLI)."""


class ValidationError(ESGLabError, ValueError):
    """Input data violates a documented invariant."""


class DataFormatError(ValidationError):
    """A history file does not match the CSV schema.

    The message always carries the offending 1-based data row number.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"{message} at row {row}"
        super().__init__(message)


class ConfigError(ValidationError):
    """An experiment configuration is malformed; ``path`` names the field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InfeasibleError(ESGLabError):
    """No allocation of the grid meets the return constraint."""
