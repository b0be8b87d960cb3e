"""
Exception types. The CLI maps ConfigError to exit code 2 and
NumericalError to exit code 3; everything else is a programming error.
"""


class AdiamagError(Exception):
    """Base class for every error raised on purpose by adiamag."""


class ConfigError(AdiamagError, ValueError):
    """Invalid configuration, parameter set or path specification."""


class PathError(ConfigError):
    """A FieldPath that cannot be built or cannot serve the request (e.g. open loop)."""


class StateError(AdiamagError, ValueError):
    """Initial moments or Gaussian states that violate an operation's precondition."""


class NumericalError(AdiamagError, RuntimeError):
    """Integrator failure, exhausted step budget or unattainable tolerance."""
