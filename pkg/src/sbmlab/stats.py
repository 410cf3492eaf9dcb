"""Statistical reductions over replica ensembles.

Everything here is a pure, permutation-invariant reduction: summaries,
an exact one-sample Kolmogorov-Smirnov distance against a reference
normal, Pearson correlations with Fisher-z confidence intervals, and the
boundedness table used for the flat-local-time claim in the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

# two-sided 99% standard-normal quantile
_Z99 = 2.5758293035489004


@dataclass(frozen=True)
class EnsembleSummary:
    n: int
    mean: float
    variance: float
    std_error: float
    min: float
    max: float


@dataclass(frozen=True)
class NormalityReport:
    ks_distance: float
    n: int
    reference_mean: float
    reference_variance: float


@dataclass(frozen=True)
class CorrelationCI:
    name: str
    n: int
    correlation: float
    ci_low: float
    ci_high: float
    skipped: bool = False


@dataclass(frozen=True)
class BoundednessRow:
    abs_x: float
    n: int
    mean_abs: float
    std_error: float


@dataclass(frozen=True)
class BoundednessReport:
    rows: tuple[BoundednessRow, ...]
    factor: float
    bounded: bool


def summarize(samples) -> EnsembleSummary:
    arr = np.asarray(samples, dtype=float).ravel()
    n = arr.size
    if n == 0:
        raise DomainError("summarize needs at least one sample")
    mean = float(arr.mean())
    if n >= 2:
        variance = float(arr.var(ddof=1))
        std_error = math.sqrt(variance / n)
    else:
        variance = math.nan
        std_error = math.nan
    return EnsembleSummary(
        n=n, mean=mean, variance=variance, std_error=std_error,
        min=float(arr.min()), max=float(arr.max()),
    )


def _normal_cdf(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return 0.5 * special.erfc((mean - x) / math.sqrt(2.0 * var))


def ks_against_normal(samples, ref_mean: float, ref_var: float) -> NormalityReport:
    """Exact sup-distance between the empirical CDF and N(ref_mean, ref_var)."""
    arr = np.sort(np.asarray(samples, dtype=float).ravel())
    n = arr.size
    if n < 50:
        raise DomainError(f"KS test needs n >= 50 samples, got {n}")
    if not ref_var > 0.0:
        raise DomainError(f"reference variance must be > 0, got {ref_var!r}")
    cdf = _normal_cdf(arr, ref_mean, ref_var)
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - cdf))
    d_minus = float(np.max(cdf - (grid - 1.0 / n)))
    return NormalityReport(
        ks_distance=max(d_plus, d_minus),
        n=n,
        reference_mean=float(ref_mean),
        reference_variance=float(ref_var),
    )


def independence_probe(z_samples, functional_samples: dict) -> list[CorrelationCI]:
    """Pearson correlation of z against each functional, with 99% Fisher-z CIs.

    Zero-variance functionals are flagged and skipped rather than dividing
    by zero; they carry no independence information.
    """
    z = np.asarray(z_samples, dtype=float).ravel()
    n = z.size
    if n < 100:
        raise DomainError(f"independence probe needs n >= 100 pairs, got {n}")
    out: list[CorrelationCI] = []
    zc = z - z.mean()
    sz = float(np.sqrt(np.sum(zc * zc)))
    for name, samples in functional_samples.items():
        f = np.asarray(samples, dtype=float).ravel()
        if f.size != n:
            raise DomainError(f"functional {name!r} has {f.size} samples, expected {n}")
        fc = f - f.mean()
        sf = float(np.sqrt(np.sum(fc * fc)))
        if sf == 0.0 or sz == 0.0:
            out.append(CorrelationCI(str(name), n, math.nan, math.nan, math.nan, True))
            continue
        corr = float(np.sum(zc * fc)) / (sz * sf)
        corr = max(-1.0, min(1.0, corr))
        half = _Z99 / math.sqrt(n - 3)
        zr = math.atanh(corr)
        out.append(
            CorrelationCI(
                name=str(name),
                n=n,
                correlation=corr,
                ci_low=math.tanh(zr - half),
                ci_high=math.tanh(zr + half),
            )
        )
    return out


def l1_boundedness_report(grid, factor: float = 3.0) -> BoundednessReport:
    """Mean |centered value| per |x| with SE; bounded unless the largest
    mean exceeds the smallest by more than `factor` after SE widening.

    `grid` is a sequence of (|x|, samples) with strictly decreasing |x|.
    """
    rows: list[BoundednessRow] = []
    prev = math.inf
    for abs_x, samples in grid:
        if not 0.0 < abs_x < prev:
            raise DomainError("grid radii must be strictly decreasing and positive")
        prev = abs_x
        arr = np.abs(np.asarray(samples, dtype=float).ravel())
        if arr.size < 2:
            raise DomainError("each grid point needs at least 2 samples")
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(arr.size))
        rows.append(BoundednessRow(float(abs_x), int(arr.size), mean, se))
    if len(rows) < 3:
        raise DomainError("boundedness report needs at least 3 grid points")
    hi = max(rows, key=lambda r: r.mean_abs)
    lo = min(rows, key=lambda r: r.mean_abs)
    bounded = (hi.mean_abs - hi.std_error) <= factor * (lo.mean_abs + lo.std_error)
    return BoundednessReport(rows=tuple(rows), factor=float(factor), bounded=bounded)
