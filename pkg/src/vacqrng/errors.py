"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class NoBalanceError(ValueError):
    """The arm-balance condition cannot be met for the given detection setup."""


class CalibrationError(ValueError):
    """LO-on and LO-off traces are inconsistent with additive noise variances."""


class InsufficientEntropyError(ValueError):
    """The leftover-hash bound leaves no room for any output bits."""


class ConfigError(ValueError):
    """A configuration value is invalid. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ExtractionRefused(RuntimeError):
    """Extraction parameters are not certified by the entropy audit."""
