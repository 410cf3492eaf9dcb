"""Test functions integrated against the measure path.

Each probe is a frozen dataclass with a radial profile around an anchor
point.  Evaluation on particle arrays is vectorized and clamps distances at
DISTANCE_FLOOR instead of letting a float collision with the anchor produce
an inf; the clamp count is returned so replicas stay auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularInputError
from .kernels import C3

# Particles closer to an anchor than this are treated as sitting at this
# distance.  Probability zero in exact arithmetic; floats can collide.
DISTANCE_FLOOR = 1e-12


def _anchor_tuple(x) -> tuple:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.shape[0] not in (2, 3):
        raise DomainError(f"anchor must be a 2- or 3-vector, got shape {arr.shape}")
    return tuple(float(c) for c in arr)


def _distances(points: np.ndarray, anchor: tuple) -> tuple[np.ndarray, int]:
    diff = points - np.asarray(anchor)
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    clamped = int(np.count_nonzero(dist < DISTANCE_FLOOR))
    if clamped:
        dist = np.maximum(dist, DISTANCE_FLOOR)
    return dist, clamped


@dataclass(frozen=True)
class Constant:
    """phi(y) = value."""

    value: float = 1.0

    singular_exponent = 0.0

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        return np.full(points.shape[0], self.value), 0


@dataclass(frozen=True)
class Gaussian:
    """Unnormalized bump exp(-|y - center|^2 / (2 scale^2)); phi(center) = 1."""

    center: tuple = (0.0, 0.0, 0.0)
    scale: float = 1.0

    singular_exponent = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", _anchor_tuple(self.center))
        if self.scale <= 0.0:
            raise DomainError("Gaussian scale must be > 0")

    @property
    def anchor(self) -> tuple:
        return self.center

    def profile(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.exp(-(rho * rho) / (2.0 * self.scale**2))

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        dist, _ = _distances(points, self.center)
        return self.profile(dist), 0


@dataclass(frozen=True)
class InverseDistance:
    """phi(y) = c3 / |y - anchor|, the d=3 Green profile."""

    anchor: tuple

    singular_exponent = 1.0

    def __post_init__(self):
        object.__setattr__(self, "anchor", _anchor_tuple(self.anchor))
        if all(c == 0.0 for c in self.anchor):
            raise SingularInputError("InverseDistance anchor must be nonzero")

    def profile(self, rho):
        return C3 / np.asarray(rho, dtype=float)

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        dist, clamped = _distances(points, self.anchor)
        return C3 / dist, clamped


@dataclass(frozen=True)
class LogDistance:
    """phi(y) = log|y - anchor|."""

    anchor: tuple

    singular_exponent = 0.0  # log blow-up, integrable against any p_t

    def __post_init__(self):
        object.__setattr__(self, "anchor", _anchor_tuple(self.anchor))
        if all(c == 0.0 for c in self.anchor):
            raise SingularInputError("LogDistance anchor must be nonzero")

    def profile(self, rho):
        return np.log(np.asarray(rho, dtype=float))

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        dist, clamped = _distances(points, self.anchor)
        return np.log(dist), clamped


@dataclass(frozen=True)
class HeatKernelProbe:
    """phi(y) = p_eps(y - anchor), the mollifier behind local times."""

    anchor: tuple
    epsilon: float

    singular_exponent = 0.0

    def __post_init__(self):
        object.__setattr__(self, "anchor", _anchor_tuple(self.anchor))
        if self.epsilon <= 0.0:
            raise DomainError("HeatKernelProbe epsilon must be > 0")

    @property
    def dimension(self) -> int:
        return len(self.anchor)

    def profile(self, rho):
        rho = np.asarray(rho, dtype=float)
        d = self.dimension
        norm = (2.0 * math.pi * self.epsilon) ** (-0.5 * d)
        return norm * np.exp(-(rho * rho) / (2.0 * self.epsilon))

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        dist, _ = _distances(points, self.anchor)
        return self.profile(dist), 0


@dataclass(frozen=True)
class InverseSquare:
    """phi(y) = |y - anchor|^{-2}, the quadratic-variation density in d=3."""

    anchor: tuple

    singular_exponent = 2.0

    def __post_init__(self):
        object.__setattr__(self, "anchor", _anchor_tuple(self.anchor))
        if all(c == 0.0 for c in self.anchor):
            raise SingularInputError("InverseSquare anchor must be nonzero")

    def profile(self, rho):
        rho = np.asarray(rho, dtype=float)
        return 1.0 / (rho * rho)

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        dist, clamped = _distances(points, self.anchor)
        return 1.0 / (dist * dist), clamped


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Oracle-only probe with an arbitrary radial profile around an anchor.

    Not accepted by the simulator; exists so the moment oracle can be
    cross-checked against hand-built profiles (Laplacians, products).
    """

    anchor: tuple
    profile_fn: object
    singular_exponent: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "anchor", _anchor_tuple(self.anchor))

    def profile(self, rho):
        return self.profile_fn(np.asarray(rho, dtype=float))

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        dist, clamped = _distances(points, self.anchor)
        return self.profile_fn(dist), clamped


TestFunction = (
    Constant
    | Gaussian
    | InverseDistance
    | LogDistance
    | HeatKernelProbe
    | InverseSquare
    | RadialFunction
)


def anchor_of(phi, d: int) -> np.ndarray:
    """Anchor as a length-d array; Constant probes anchor at the origin."""
    if isinstance(phi, Constant):
        return np.zeros(d)
    arr = np.asarray(phi.anchor, dtype=float)
    if arr.shape[0] != d:
        raise DomainError(
            f"probe anchor has dimension {arr.shape[0]}, experiment has d={d}"
        )
    return arr


def profile_of(phi):
    """Radial profile h with phi(y) = h(|y - anchor|); Constant included."""
    if isinstance(phi, Constant):
        return lambda rho: np.full_like(np.asarray(rho, dtype=float), phi.value)
    return phi.profile
