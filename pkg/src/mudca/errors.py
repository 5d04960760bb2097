"""Exception types shared across the simulator."""


class ParameterError(ValueError):
    """An operation was called with out-of-domain arguments."""


class ConfigError(ValueError):
    """A run configuration is invalid. ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class DegenerateChannelError(RuntimeError):
    """The channel matrix is (numerically) rank deficient; no zero-forcing
    precoder exists. Callers treat the affected frame as zero-rate."""
