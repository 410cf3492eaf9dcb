"""Shared small ensembles so the estimator tests don't re-simulate."""

import pytest

from sbmlab.probes import (
    Constant,
    Gaussian,
    HeatKernelProbe,
    InverseDistance,
    InverseSquare,
    LogDistance,
)
from sbmlab.simulate import Observable, SimConfig, run_ensemble

SMALL_R = 0.25
SMALL_EPS = (SMALL_R / 4.0) ** 2
SMALL_DT = 5e-4
SMALL_N = 100


@pytest.fixture(scope="session")
def small_d3_ensemble():
    x = (SMALL_R, 0.0, 0.0)
    config = SimConfig(
        d=3,
        n_init=SMALL_N,
        dt=SMALL_DT,
        t_max=1.0,
        seed=90210,
        observables=(
            Observable(Constant(1.0)),
            Observable(HeatKernelProbe(x, SMALL_EPS), occupation=True),
            Observable(HeatKernelProbe(x, 2.0 * SMALL_EPS), occupation=True),
            Observable(HeatKernelProbe(x, 4.0 * SMALL_EPS), occupation=True),
            Observable(InverseSquare(x), occupation=True),
            Observable(InverseDistance(x)),
            Observable(LogDistance(x)),
            Observable(Gaussian((0.0, 0.0, 0.0), 1.0)),
        ),
        snapshot_times=(0.25, 0.5, 0.75),
    )
    return config, run_ensemble(config, 48)


@pytest.fixture(scope="session")
def small_d2_ensemble():
    x = (SMALL_R, 0.0)
    config = SimConfig(
        d=2,
        n_init=SMALL_N,
        dt=SMALL_DT,
        t_max=1.0,
        seed=4242,
        observables=(
            Observable(Constant(1.0)),
            Observable(HeatKernelProbe(x, SMALL_EPS), occupation=True),
            Observable(LogDistance(x)),
        ),
        snapshot_times=(0.5,),
    )
    return config, run_ensemble(config, 48)
