"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid parameter or parameter combination supplied by the caller."""


class RuntimeFailure(RuntimeError):
    """A stage failed at runtime despite a valid configuration."""
