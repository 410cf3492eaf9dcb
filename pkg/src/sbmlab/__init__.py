"""Simulation and verification lab for local times of critical branching
Brownian clouds in two and three dimensions."""

from .errors import (
    ConfigError,
    DomainError,
    SingularInputError,
    UnregisteredObservableError,
)
from .kernels import C2, C3, C31

__all__ = [
    "C2",
    "C3",
    "C31",
    "ConfigError",
    "DomainError",
    "SingularInputError",
    "UnregisteredObservableError",
]

__version__ = "0.1.0"
