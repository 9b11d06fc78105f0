"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data violates a contract (bad cell, missing column, empty table)."""


class ColumnError(DataError):
    """A column was requested that the table does not have."""

    def __init__(self, name: str, available=None):
        self.name = name
        msg = f"unknown column {name!r}"
        if available is not None:
            msg += f" (available: {', '.join(available)})"
        super().__init__(msg)


class ConfigError(ValueError):
    """Invalid hyperparameters, optimizer settings or run configuration."""


class FitError(RuntimeError):
    """Model fitting or optimization could not proceed."""
