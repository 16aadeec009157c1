"""Exception hierarchy shared by every package in the laboratory."""

from typing import Optional


class BanditLabError(Exception):
    """Base class for all laboratory errors."""


class ConfigurationError(BanditLabError):
    """Invalid experiment, environment, or solver configuration."""


class EnumerationBudgetError(ConfigurationError):
    """An exact enumeration would exceed the configured budget."""


class InputError(BanditLabError):
    """Numeric input that cannot be processed (non-finite, wrong shape)."""


class IngestionError(BanditLabError):
    """A dataset file could not be turned into a bundle."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row={row}")
        if column is not None:
            location.append(f"column={column}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
