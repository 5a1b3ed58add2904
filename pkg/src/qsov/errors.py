"""Common exception hierarchy."""


class QsovError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigError(QsovError):
    """Invalid model configuration (bad q, degenerate parameters, ...)."""
