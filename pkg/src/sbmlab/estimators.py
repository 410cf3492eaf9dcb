"""Local times, Tanaka-style decompositions, and fluctuation statistics
extracted from simulated trajectories.

The martingale terms are always residuals of the stored decompositions,
never simulated directly: the particle picture does not expose the driving
martingale measure, but the decompositions determine each term from
quantities the trajectory does carry.  What is testable is therefore
statistical: residual means vanish and residual variances match the
quadratic-variation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnregisteredObservableError
from .kernels import C2, C3, C31
from .probes import Gaussian, HeatKernelProbe, InverseDistance, InverseSquare, LogDistance
from .simulate import ParticleCloud, Trajectory


def measure_integral(cloud: ParticleCloud, phi) -> float:
    """X(phi) = (1/N) sum_i phi(y_i); empty cloud integrates to zero."""
    if cloud.count == 0:
        return 0.0
    values, _ = phi.evaluate(cloud.positions)
    return float(np.sum(values)) * cloud.mass_per_particle


@dataclass(frozen=True)
class TanakaDecomposition3D:
    x: tuple
    epsilon: float
    L: float                   # mollified local time, occupation of p_eps^x
    green_term: float          # c3/|x|
    terminal_phi: float        # X_t(c3/|.-x|)
    martingale_residual: float  # L - green_term + terminal_phi
    qv_integral: float         # c3^2 * occupation of |.-x|^{-2}


@dataclass(frozen=True)
class TanakaDecomposition2D:
    x: tuple
    epsilon: float
    L: float
    terminal_g: float          # X_t(log|.-x|)
    delta_term: float          # log|x|
    martingale_residual: float  # terminal_g - delta_term - pi L


@dataclass(frozen=True)
class FluctuationSample:
    x: tuple
    t: float
    z_value: float
    companion_functionals: tuple[float, ...]


def _anchor(x, d: int) -> tuple:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape != (d,):
        raise DomainError(f"anchor must be a {d}-vector, got shape {arr.shape}")
    return tuple(float(c) for c in arr)


def mollified_local_time(trajectory: Trajectory, x, eps: float) -> float:
    """Occupation integral of the heat-kernel probe at (x, eps).

    Must have been registered before the run; local times cannot be
    recomputed from a finished trajectory.
    """
    anchor = _anchor(x, trajectory.config.d)
    return trajectory.occupation_value(HeatKernelProbe(anchor, eps))


def tanaka_3d(trajectory: Trajectory, x, eps: float) -> TanakaDecomposition3D:
    if trajectory.config.d != 3:
        raise DomainError("tanaka_3d needs a d=3 trajectory")
    anchor = _anchor(x, 3)
    r = math.sqrt(sum(c * c for c in anchor))
    if r == 0.0:
        raise DomainError("anchor must be nonzero")
    L = trajectory.occupation_value(HeatKernelProbe(anchor, eps))
    green = C3 / r
    terminal = trajectory.terminal_value(InverseDistance(anchor))
    qv = C3 * C3 * trajectory.occupation_value(InverseSquare(anchor))
    return TanakaDecomposition3D(
        x=anchor,
        epsilon=eps,
        L=L,
        green_term=green,
        terminal_phi=terminal,
        martingale_residual=L - green + terminal,
        qv_integral=qv,
    )


def tanaka_2d(trajectory: Trajectory, x, eps: float) -> TanakaDecomposition2D:
    if trajectory.config.d != 2:
        raise DomainError("tanaka_2d needs a d=2 trajectory")
    anchor = _anchor(x, 2)
    r = math.sqrt(sum(c * c for c in anchor))
    if r == 0.0:
        raise DomainError("anchor must be nonzero")
    L = trajectory.occupation_value(HeatKernelProbe(anchor, eps))
    terminal_g = trajectory.terminal_value(LogDistance(anchor))
    delta_term = math.log(r)
    return TanakaDecomposition2D(
        x=anchor,
        epsilon=eps,
        L=L,
        terminal_g=terminal_g,
        delta_term=delta_term,
        martingale_residual=terminal_g - delta_term - math.pi * L,
    )


def log_identity_check_3d(trajectory: Trajectory, x) -> float:
    """Martingale residual of the d=3 log decomposition:

    M_t(g_x) = X_t(g_x) - log|x| - (1/2) * occupation(|.-x|^{-2}).

    The quadratic variation stored by tanaka_3d is c3^2 times the same
    occupation accumulator, so qv_integral = 2 c3^2 (X_t(g_x) - log|x| -
    M_t(g_x)) holds exactly in floating point; tests assert it to 1e-10.
    """
    if trajectory.config.d != 3:
        raise DomainError("log_identity_check_3d needs a d=3 trajectory")
    anchor = _anchor(x, 3)
    r = math.sqrt(sum(c * c for c in anchor))
    if r == 0.0:
        raise DomainError("anchor must be nonzero")
    terminal_g = trajectory.terminal_value(LogDistance(anchor))
    occ = trajectory.occupation_value(InverseSquare(anchor))
    return terminal_g - math.log(r) - 0.5 * occ


def psi(radius: float) -> float:
    """Fluctuation normalization (c31 log(1/|x|))^{1/2}, |x| < 1."""
    if not 0.0 < radius < 1.0:
        raise DomainError(f"psi needs 0 < |x| < 1, got {radius!r}")
    return math.sqrt(C31 * math.log(1.0 / radius))


def fluctuation_statistic(
    trajectory: Trajectory,
    x,
    eps: float,
    t: float | None = None,
    *,
    companions: tuple[Gaussian, ...] = (),
    snapshot_time: float | None = None,
) -> FluctuationSample:
    """z = (L - c3/|x|)/psi(|x|) plus companion functionals X_s(G_i).

    Companions are read from the snapshot at snapshot_time (default t/2);
    they probe the independence of the fluctuation from the measure path.
    """
    if trajectory.config.d != 3:
        raise DomainError("fluctuation_statistic needs a d=3 trajectory")
    anchor = _anchor(x, 3)
    r = math.sqrt(sum(c * c for c in anchor))
    if not 0.0 < r < 1.0:
        raise DomainError(f"fluctuation statistic needs 0 < |x| < 1, got |x|={r:g}")
    if t is None:
        t = trajectory.config.t_max
    L = trajectory.occupation_value(HeatKernelProbe(anchor, eps))
    z = (L - C3 / r) / psi(r)
    companion_values: list[float] = []
    if companions:
        if snapshot_time is None:
            snapshot_time = t / 2.0
        half_dt = trajectory.config.dt / 2.0
        cloud = None
        for snap in trajectory.snapshots:
            if abs(snap.time - snapshot_time) <= half_dt:
                cloud = snap
                break
        if cloud is None:
            raise UnregisteredObservableError(
                f"no snapshot at time {snapshot_time!r}; register it in snapshot_times"
            )
        companion_values = [measure_integral(cloud, g) for g in companions]
    return FluctuationSample(
        x=anchor, t=float(t), z_value=z, companion_functionals=tuple(companion_values)
    )


def centered_local_time_2d(trajectory: Trajectory, x, eps: float) -> float:
    """L - c2 log(1/|x|), the quantity whose L1 norm stays bounded as x -> 0."""
    if trajectory.config.d != 2:
        raise DomainError("centered_local_time_2d needs a d=2 trajectory")
    anchor = _anchor(x, 2)
    r = math.sqrt(sum(c * c for c in anchor))
    if r == 0.0:
        raise DomainError("anchor must be nonzero")
    L = trajectory.occupation_value(HeatKernelProbe(anchor, eps))
    return L - C2 * math.log(1.0 / r)
