"""Exception types shared across the package.

Split along the CLI exit-code boundary: configuration/validation problems
(exit 1), numeric failures during simulation or training (exit 2).
"""


class SpikecastError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SpikecastError):
    """Invalid configuration, parameters, or preconditions."""


class NumericError(SpikecastError):
    """Non-finite values or numerical divergence at runtime."""


class TuningError(SpikecastError):
    """Preset tuning exhausted its budget without a match."""

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest if nearest is not None else []
