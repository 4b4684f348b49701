"""Exception types shared across the package."""


class ConfigError(Exception):
    """Raised for unparseable or invalid experiment configuration."""


class NumericFailure(RuntimeError):
    """Raised when a run produces NaN or infinite values."""


class CheckFailure(Exception):
    """Raised when a requested validity check fails on otherwise sound data."""
