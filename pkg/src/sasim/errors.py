"""Exception types shared across the package."""


class SasimError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInput(SasimError):
    """An input vector or amplitude pair carries no usable signal."""


class InvalidMixture(SasimError):
    """Mixture weights are negative or do not sum to one."""


class InvalidRates(SasimError):
    """Per-pulse source rates violate their bounds or the occupancy limit."""


class InsufficientData(SasimError):
    """Not enough counts to form the requested estimate."""


class IncompleteSettings(SasimError):
    """Measurement settings do not span the two-qubit operator space."""


class ConfigError(SasimError):
    """Malformed or inconsistent experiment configuration."""


class DataFormatError(SasimError):
    """An input data file does not match the documented schema."""
