"""The normalized local-time fluctuation at a shrinking anchor.

z = (L - c3/|x|) / sqrt(c31 log(1/|x|)) concentrates around its oracle
mean; the KS distance against the oracle normal shrinks slowly (the
normalization is logarithmic), and at desk-scale |x| the statistic is
still visibly correlated with functionals of the measure itself.
"""

import numpy as np

from sbmlab.estimators import fluctuation_statistic, psi
from sbmlab.kernels import C3, local_time_mean_closed
from sbmlab.moments import qv_expectation
from sbmlab.probes import Gaussian, HeatKernelProbe, InverseDistance
from sbmlab.simulate import Observable, SimConfig, run_ensemble
from sbmlab.stats import independence_probe, ks_against_normal, summarize

ANCHORS = (0.3, 0.2, 0.1)
T = 1.0
COMPANIONS = (
    Gaussian((0.0, 0.0, 0.0), 0.5),
    Gaussian((0.0, 0.0, 0.0), 1.0),
    Gaussian((0.5, 0.0, 0.0), 1.0),
)

obs = []
for r in ANCHORS:
    obs.append(
        Observable(HeatKernelProbe((r, 0.0, 0.0), (r / 4.0) ** 2), occupation=True)
    )
cfg = SimConfig(
    d=3, n_init=150, dt=5e-4, t_max=T, seed=424242,
    observables=tuple(obs), snapshot_times=(T / 2.0,),
)
print("simulating 240 replicas ...")
trajectories = run_ensemble(cfg, 240)

print("\n|x|    z mean   oracle    Var(z)   KS vs oracle normal")
z_small = None
for r in ANCHORS:
    x = (r, 0.0, 0.0)
    eps = (r / 4.0) ** 2
    samples = [
        fluctuation_statistic(tr, x, eps, companions=COMPANIONS)
        for tr in trajectories
    ]
    z = np.array([s.z_value for s in samples])
    mean_oracle = (local_time_mean_closed(T, r, 3, eps=eps) - C3 / r) / psi(r)
    var_oracle = qv_expectation(InverseDistance(x), T).value / psi(r) ** 2
    ks = ks_against_normal(z, mean_oracle, var_oracle).ks_distance
    s = summarize(z)
    print(f"{r:4.2f}  {s.mean:+7.4f}  {mean_oracle:+7.4f}  {s.variance:7.4f}  {ks:6.4f}")
    if r == min(ANCHORS):
        z_small = z
        comp_samples = {
            f"G{i}": np.array([s.companion_functionals[i] for s in samples])
            for i in range(len(COMPANIONS))
        }

print("\ncompanion correlations at the smallest anchor (independence is an "
      "|x| -> 0 limit;\nat |x|=0.1 the coupling through the common mass path "
      "is still plainly visible):")
for ci in independence_probe(z_small, comp_samples):
    print(f"  {ci.name}: corr = {ci.correlation:+.3f}  "
          f"99% CI = [{ci.ci_low:+.3f}, {ci.ci_high:+.3f}]")
