"""The three-dimensional local-time decomposition, term by term.

L = green term - terminal functional + martingale: the residual that
backs out the martingale term has mean zero, and its variance matches the
quadratic-variation oracle (the isometry). The companion log-decomposition
shares its accumulator, so the cross-relation holds to rounding.
"""

import math

import numpy as np

from sbmlab.estimators import log_identity_check_3d, tanaka_3d
from sbmlab.kernels import C3
from sbmlab.moments import qv_expectation
from sbmlab.probes import (
    HeatKernelProbe,
    InverseDistance,
    InverseSquare,
    LogDistance,
)
from sbmlab.simulate import Observable, SimConfig, run_ensemble

X = (0.2, 0.0, 0.0)
EPS = (0.2 / 4.0) ** 2

cfg = SimConfig(
    d=3,
    n_init=150,
    dt=5e-4,
    t_max=1.0,
    seed=6021,
    observables=(
        Observable(HeatKernelProbe(X, EPS), occupation=True),
        Observable(InverseSquare(X), occupation=True),
        Observable(InverseDistance(X)),
        Observable(LogDistance(X)),
    ),
)
print("simulating 200 replicas ...")
trajectories = run_ensemble(cfg, 200)

decs = [tanaka_3d(tr, X, EPS) for tr in trajectories]
resid = np.array([d.martingale_residual for d in decs])
qv = np.array([d.qv_integral for d in decs])

se = resid.std(ddof=1) / math.sqrt(resid.size)
oracle = qv_expectation(InverseDistance(X), 1.0).value
print(f"\nresidual mean: {resid.mean():+.4f} +/- {se:.4f}  (target 0)")
print(f"residual variance: {resid.var(ddof=1):.4f}")
print(f"qv oracle:         {oracle:.4f}")
print(f"isometry ratio:    {resid.var(ddof=1) / oracle:.3f}  (target ~1)")
print(f"qv sample mean:    {qv.mean():.4f}")

worst = 0.0
for tr, dec in zip(trajectories, decs):
    m = log_identity_check_3d(tr, X)
    g = tr.terminal_value(LogDistance(X))
    recon = 2.0 * C3 * C3 * (g - math.log(0.2) - m)
    worst = max(worst, abs(recon - dec.qv_integral) / dec.qv_integral)
print(f"cross-relation worst relative gap: {worst:.2e}  (identity, not a statistic)")
