"""Error types raised across the package."""


class HeavyTrafficError(ValueError):
    """Base class for all package errors."""


class DomainError(HeavyTrafficError):
    """An argument lies outside the domain of a function."""


class RangeError(HeavyTrafficError):
    """A requested value lies outside the range covered by a numeric inverse."""


class UsageError(HeavyTrafficError):
    """A function was called with an empty or inconsistent request."""


class ConfigurationError(HeavyTrafficError):
    """A configuration or model parameter set is invalid."""


class DegenerateError(HeavyTrafficError):
    """A construction has no valid solution for the given law."""


class TruncationBiasError(HeavyTrafficError):
    """A Poisson cloud is truncated too early for the requested functional."""
