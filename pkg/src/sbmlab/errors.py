"""Exception types shared across the package.

Everything numerical raises ``DomainError`` (a ``ValueError``) when an input
is outside the mathematical domain of an operation, so callers can catch one
type regardless of which layer rejected the input.
"""


class DomainError(ValueError):
    """Input outside the mathematical domain of the requested quantity."""


class SingularInputError(DomainError):
    """Input sits exactly on a singularity (e.g. an anchor at the origin)."""


class ConfigError(ValueError):
    """Invalid simulation or experiment configuration."""


class UnregisteredObservableError(KeyError):
    """A trajectory was asked for an observable it never accumulated."""
