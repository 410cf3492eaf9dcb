"""A single branching cloud, watched as it evolves.

Runs one replica with snapshots, prints the mass path, then reruns the
same seed to extinction and reports when the population dies.
"""

from sbmlab.probes import Constant, Gaussian
from sbmlab.simulate import Observable, SimConfig, run_ensemble, simulate

base = dict(
    d=2,
    n_init=150,
    dt=5e-4,
    seed=31415,
    observables=(
        Observable(Constant(1.0), occupation=True),
        Observable(Gaussian((0.0, 0.0), 0.5)),
    ),
)

cfg = SimConfig(t_max=1.0, snapshot_times=tuple(i * 0.125 for i in range(9)), **base)
tr = simulate(cfg)

print("time   particles  total mass   spread (rms radius)")
for snap in tr.snapshots:
    rms = float((snap.positions**2).sum(axis=1).mean() ** 0.5) if snap.count else float("nan")
    print(f"{snap.time:4.3f}  {snap.count:9d}  {snap.total_mass:10.3f}   {rms:8.3f}")

print(f"\noccupation integral of mass: {tr.occupation_value(Constant(1.0)):.4f}"
      f"  (E = t = {cfg.t_max})")
print(f"terminal Gaussian functional: {tr.terminal_value(Gaussian((0.0, 0.0), 0.5)):.4f}")

print("\nrunning 12 replicas to extinction ...")
ext_cfg = SimConfig(t_max=0.5, run_to_extinction=True, **base)
times = [t.extinct_at for t in run_ensemble(ext_cfg, 12)]
alive = sum(t is None for t in times)
dead = sorted(t for t in times if t is not None)
print(f"extinct: {len(dead)}/12 (still alive at the horizon: {alive})")
print("extinction times:", ", ".join(f"{t:.2f}" for t in dead))
