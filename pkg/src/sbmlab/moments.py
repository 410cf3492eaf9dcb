"""Quadrature oracles for the first two moments of measure functionals and
for martingale quadratic variation, all started from a unit point mass at
the origin.

first_moment   E X_t(phi)      = P_t phi(0)
second_moment  E X_t(phi)^2    = (P_t phi(0))^2 + int_0^t P_s((P_{t-s} phi)^2)(0) ds
qv_expectation E [M(phi)]_t    = int_0^t P_s(phi^2)(0) ds

The inner transition P_u phi is closed-form for every probe kind that has
one (Gaussian, heat-kernel, inverse-distance, 2-d log) and falls back to
radial quadrature otherwise, so the nested integral is at worst two levels
deep.  Time integrals are split near s = t where (P_{t-s} phi)^2 peaks for
singular profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .kernels import (
    ABS_TOL,
    C3,
    REL_TOL,
    QuadratureResult,
    gauss_radial_integral,
)
from .probes import (
    Constant,
    Gaussian,
    HeatKernelProbe,
    InverseDistance,
    LogDistance,
    anchor_of,
    profile_of,
)


@dataclass(frozen=True)
class MomentReport:
    first: QuadratureResult
    second: QuadratureResult
    qv: QuadratureResult


def _dimension(phi, d: int | None) -> int:
    if isinstance(phi, Constant):
        if d is None:
            raise DomainError("Constant probes need an explicit dimension")
        return int(d)
    dim = len(phi.anchor)
    if d is not None and int(d) != dim:
        raise DomainError(f"probe anchor is {dim}-dimensional, asked for d={d}")
    return dim


def _singular_exponent(phi) -> float:
    return float(getattr(phi, "singular_exponent", 0.0))


def _require_integrable(phi, d: int, *, squared: bool) -> None:
    alpha = _singular_exponent(phi) * (2.0 if squared else 1.0)
    if alpha >= d:
        raise DomainError(
            f"{type(phi).__name__}{' squared' if squared else ''} has singularity "
            f"exponent {alpha:g} >= d={d}; the Gaussian moment diverges"
        )


def _transition_closed(phi, u: float):
    """P_u phi as a radial profile around phi's anchor, when closed-form."""
    if isinstance(phi, Constant):
        return lambda w: np.full_like(np.asarray(w, dtype=float), phi.value)
    if isinstance(phi, Gaussian):
        s2 = phi.scale**2
        d = len(phi.center)
        amp = (s2 / (s2 + u)) ** (0.5 * d)
        return lambda w: amp * np.exp(-np.asarray(w, float) ** 2 / (2.0 * (s2 + u)))
    if isinstance(phi, HeatKernelProbe):
        tau = phi.epsilon + u
        d = phi.dimension
        norm = (2.0 * math.pi * tau) ** (-0.5 * d)
        return lambda w: norm * np.exp(-np.asarray(w, float) ** 2 / (2.0 * tau))
    if isinstance(phi, InverseDistance):
        if u == 0.0:
            return phi.profile
        return lambda w: C3 * special.erf(np.asarray(w, float) / math.sqrt(2.0 * u)) / np.asarray(w, float)
    if isinstance(phi, LogDistance) and len(phi.anchor) == 2:
        if u == 0.0:
            return phi.profile
        # d/du P_u log|.| = (1/2) Delta P_u log|.| and Delta log|y| = 2 pi delta_0
        # in the plane, so P_u g(w) = log w + (1/2) E1(w^2 / 2u).
        return lambda w: (
            np.log(np.asarray(w, float))
            + 0.5 * special.exp1(np.asarray(w, float) ** 2 / (2.0 * u))
        )
    return None


def _transition(phi, u: float, d: int):
    """P_u phi as a radial profile; quadrature fallback for open forms."""
    closed = _transition_closed(phi, u)
    if closed is not None:
        return closed
    if u == 0.0:
        return profile_of(phi)
    base = profile_of(phi)

    def prof(w):
        w_arr = np.atleast_1d(np.asarray(w, dtype=float))
        out = np.array(
            [
                gauss_radial_integral(base, float(wi), u, d, abs_tol=1e-10).value
                for wi in w_arr
            ]
        )
        return out if np.ndim(w) else float(out[0])

    return prof


def first_moment(
    phi,
    t: float,
    d: int | None = None,
    *,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> QuadratureResult:
    """E X_t(phi) = P_t phi(0)."""
    if t < 0.0:
        raise DomainError(f"need t >= 0, got t={t!r}")
    if isinstance(phi, Constant):
        return QuadratureResult(phi.value, 0.0, 0)
    dim = _dimension(phi, d)
    _require_integrable(phi, dim, squared=False)
    r = float(np.linalg.norm(anchor_of(phi, dim)))
    if t == 0.0:  # P_0 phi(0) = phi(0)
        return QuadratureResult(float(profile_of(phi)(r)), 0.0, 0)
    return gauss_radial_integral(
        profile_of(phi), r, t, dim, abs_tol=abs_tol, rel_tol=rel_tol
    )


def qv_expectation(
    phi,
    t: float,
    d: int | None = None,
    *,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> QuadratureResult:
    """E [M(phi)]_t = int_0^t P_s(phi^2)(0) ds."""
    if t < 0.0:
        raise DomainError(f"need t >= 0, got t={t!r}")
    if isinstance(phi, Constant):
        return QuadratureResult(phi.value**2 * t, 0.0, 0)
    dim = _dimension(phi, d)
    _require_integrable(phi, dim, squared=True)
    if t == 0.0:
        return QuadratureResult(0.0, 0.0, 0)
    base = profile_of(phi)
    r = float(np.linalg.norm(anchor_of(phi, dim)))

    def squared(rho):
        v = base(rho)
        return v * v

    count = 0
    worst_inner = 0.0

    def integrand(s: float) -> float:
        nonlocal count, worst_inner
        inner = gauss_radial_integral(
            squared, r, s, dim, abs_tol=abs_tol / (2.0 * t), rel_tol=rel_tol
        )
        count += inner.evaluations
        worst_inner = max(worst_inner, inner.abs_error_estimate)
        return inner.value

    pts = [p for p in (r * r / dim, t / 2.0) if 0.0 < p < t]
    value, err = integrate.quad(
        integrand, 0.0, t, points=sorted(set(pts)), limit=300,
        epsabs=abs_tol, epsrel=rel_tol,
    )
    return QuadratureResult(value, err + worst_inner * t, count)


def second_moment(
    phi,
    t: float,
    d: int | None = None,
    *,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> QuadratureResult:
    """E X_t(phi)^2 = (P_t phi(0))^2 + int_0^t P_s((P_{t-s} phi)^2)(0) ds.

    The time integrand peaks at s -> t for singular profiles (it behaves
    like (t-s)^{(d - 2 alpha)/2} there); the tail quarter of the interval is
    integrated with s = t - v^2 so the adaptive rule sees a bounded
    integrand.
    """
    if t < 0.0:
        raise DomainError(f"need t >= 0, got t={t!r}")
    if isinstance(phi, Constant):
        return QuadratureResult(phi.value**2 * (1.0 + t), 0.0, 0)
    dim = _dimension(phi, d)
    _require_integrable(phi, dim, squared=False)
    r = float(np.linalg.norm(anchor_of(phi, dim)))
    mean = first_moment(phi, t, dim, abs_tol=abs_tol, rel_tol=rel_tol)
    if t == 0.0:
        return QuadratureResult(mean.value**2, 0.0, 0)

    count = 0
    worst_inner = 0.0

    def middle(s: float) -> float:
        nonlocal count, worst_inner
        prof = _transition(phi, t - s, dim)

        def sq(w):
            v = prof(w)
            return v * v

        inner = gauss_radial_integral(
            sq, r, s, dim, abs_tol=abs_tol / (2.0 * t), rel_tol=rel_tol
        )
        count += inner.evaluations
        worst_inner = max(worst_inner, inner.abs_error_estimate)
        return inner.value

    tau = t / 4.0
    head, err_head = integrate.quad(
        middle, 0.0, t - tau, limit=200, epsabs=abs_tol, epsrel=rel_tol
    )
    tail, err_tail = integrate.quad(
        lambda v: 2.0 * v * middle(t - v * v),
        0.0,
        math.sqrt(tau),
        limit=200,
        epsabs=abs_tol,
        epsrel=rel_tol,
    )
    value = mean.value**2 + head + tail
    err = err_head + err_tail + worst_inner * t + 2.0 * abs(mean.value) * mean.abs_error_estimate
    return QuadratureResult(value, err, count + mean.evaluations)


def moment_report(
    phi,
    t: float,
    d: int | None = None,
    *,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> MomentReport:
    return MomentReport(
        first=first_moment(phi, t, d, abs_tol=abs_tol, rel_tol=rel_tol),
        second=second_moment(phi, t, d, abs_tol=abs_tol, rel_tol=rel_tol),
        qv=qv_expectation(phi, t, d, abs_tol=abs_tol, rel_tol=rel_tol),
    )
