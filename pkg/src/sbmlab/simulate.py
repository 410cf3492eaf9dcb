"""Critical branching Brownian particle system started from a unit point
mass at the origin, with streaming occupation accumulators.

The system carries N particles of mass 1/N each; every step each particle
moves by an independent N(0, dt I) increment, then branches with
probability q = 1 - exp(-N dt) (half deaths, half binary splits at the
parent's post-move position).  With this rate the total-mass variance per
unit time is q/(N dt) ~ 1, which calibrates the quadratic variation of the
limit to [M(phi)]_t = int_0^t X_s(phi^2) ds.

Occupation functionals int_0^t X_s(phi) ds accumulate by the trapezoid
rule on end-of-step values, so they must be registered before the run.
Replicas draw from independent streams derived from the root seed by
spawn keys, making ensembles independent of worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _engine
from .errors import ConfigError, UnregisteredObservableError
from .kernels import C3
from .probes import (
    Constant,
    Gaussian,
    HeatKernelProbe,
    InverseDistance,
    InverseSquare,
    LogDistance,
    TestFunction,
    anchor_of,
)

MAX_BRANCH_STEP = 0.1  # N*dt above this makes 1 - e^{-N dt} a poor rate proxy

# run_to_extinction keeps stepping past t_max in chunks of n_steps; this many
# extra chunks bound the horizon (criticality keeps the expected cost finite).
EXTINCTION_HORIZON_FACTOR = 256

_KIND_CODES = {
    Constant: _engine.KIND_CONSTANT,
    Gaussian: _engine.KIND_GAUSSIAN,
    InverseDistance: _engine.KIND_INVERSE_DISTANCE,
    LogDistance: _engine.KIND_LOG_DISTANCE,
    HeatKernelProbe: _engine.KIND_HEAT_PROBE,
    InverseSquare: _engine.KIND_INVERSE_SQUARE,
}


@dataclass(frozen=True)
class Observable:
    """A test function plus whether to stream its occupation integral."""

    phi: TestFunction
    occupation: bool = False


@dataclass(frozen=True)
class SimConfig:
    d: int
    n_init: int
    dt: float
    t_max: float
    seed: int
    observables: tuple[Observable, ...] = ()
    snapshot_times: tuple[float, ...] = ()
    run_to_extinction: bool = False
    keep_terminal_cloud: bool = False
    engine: str = "auto"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigError(f"d must be 2 or 3, got {self.d!r}")
        if not (isinstance(self.n_init, (int, np.integer)) and self.n_init >= 1):
            raise ConfigError(f"n_init must be a positive integer, got {self.n_init!r}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (self.t_max > 0.0 and math.isfinite(self.t_max)):
            raise ConfigError(f"t_max must be positive, got {self.t_max!r}")
        if self.n_init * self.dt > MAX_BRANCH_STEP + 1e-12:
            raise ConfigError(
                f"N*dt = {self.n_init * self.dt:g} exceeds {MAX_BRANCH_STEP}; "
                "refine dt (branching probability per step must stay small)"
            )
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(
            self, "snapshot_times", tuple(float(s) for s in self.snapshot_times)
        )
        for obs in self.observables:
            if not isinstance(obs, Observable):
                raise ConfigError(f"observables must be Observable, got {obs!r}")
            if type(obs.phi) not in _KIND_CODES:
                raise ConfigError(
                    f"{type(obs.phi).__name__} is not simulatable (oracle-only probe)"
                )
            anchor_err_check = anchor_of(obs.phi, self.d)
            del anchor_err_check
        self._steps_for(self.t_max, "t_max")
        prev = 0.0
        for s in self.snapshot_times:
            if s < prev or s > self.t_max + 1e-9:
                raise ConfigError("snapshot_times must be sorted within [0, t_max]")
            self._steps_for(s, "snapshot time")
            prev = s
        if self.engine not in ("auto", "stepwise", "event"):
            raise ConfigError(f"engine must be auto|stepwise|event, got {self.engine!r}")
        if self.engine == "event" and (
            any(o.occupation for o in self.observables)
            or self.snapshot_times
            or self.run_to_extinction
        ):
            raise ConfigError(
                "event engine cannot stream occupation integrals, snapshots, "
                "or run to extinction"
            )

    def _steps_for(self, time: float, what: str) -> int:
        k = round(time / self.dt)
        if abs(k * self.dt - time) > 1e-9 * max(1.0, time):
            raise ConfigError(f"{what} = {time!r} is not an integer multiple of dt")
        return int(k)

    @property
    def n_steps(self) -> int:
        return self._steps_for(self.t_max, "t_max")

    @property
    def branch_probability(self) -> float:
        return -math.expm1(-self.n_init * self.dt)

    def resolved_engine(self) -> str:
        if self.engine != "auto":
            return self.engine
        needs_steps = (
            any(o.occupation for o in self.observables)
            or bool(self.snapshot_times)
            or self.run_to_extinction
        )
        return "stepwise" if needs_steps else "event"


@dataclass(frozen=True)
class ParticleCloud:
    time: float
    positions: np.ndarray
    mass_per_particle: float

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def total_mass(self) -> float:
        return self.count * self.mass_per_particle


@dataclass(frozen=True)
class Trajectory:
    config: SimConfig
    replica_index: int
    occupation: np.ndarray          # final accumulator per observable (nan if not registered)
    terminal_values: np.ndarray     # X_{t_end}(phi) per observable
    clamp_counts: np.ndarray        # singularity clamps per observable
    snapshots: tuple[ParticleCloud, ...]
    occupation_series: np.ndarray   # accumulators at snapshot times, shape (n_snap, n_obs)
    extinct_at: float | None
    terminal_cloud: ParticleCloud | None = None

    def _index(self, phi, occupation: bool | None = None) -> int:
        for i, obs in enumerate(self.config.observables):
            if obs.phi == phi and (occupation is None or obs.occupation == occupation):
                return i
        raise UnregisteredObservableError(
            f"observable {phi!r} (occupation={occupation}) was not registered; "
            "occupation integrals cannot be recomputed after the run"
        )

    def occupation_value(self, phi) -> float:
        return float(self.occupation[self._index(phi, occupation=True)])

    def terminal_value(self, phi) -> float:
        return float(self.terminal_values[self._index(phi)])

    def clamp_count(self, phi) -> int:
        return int(self.clamp_counts[self._index(phi)])


def init(config: SimConfig) -> ParticleCloud:
    """N particles of mass 1/N at the origin; X_0 = delta_0 exactly."""
    return ParticleCloud(
        time=0.0,
        positions=np.zeros((config.n_init, config.d)),
        mass_per_particle=1.0 / config.n_init,
    )


def step(cloud: ParticleCloud, config: SimConfig, rng: np.random.Generator) -> ParticleCloud:
    """Reference single step in plain numpy: move, then branch.

    The compiled drivers implement the same law; this version exists for
    unit-level checks and exploratory work.
    """
    n = cloud.count
    if n == 0:
        return ParticleCloud(cloud.time + config.dt, cloud.positions, cloud.mass_per_particle)
    q = config.branch_probability
    moved = cloud.positions + math.sqrt(config.dt) * rng.standard_normal((n, config.d))
    u = rng.random(n)
    offspring = np.where(u < 0.5 * q, 0, np.where(u < q, 2, 1))
    return ParticleCloud(
        time=cloud.time + config.dt,
        positions=np.repeat(moved, offspring, axis=0),
        mass_per_particle=cloud.mass_per_particle,
    )


def _observable_arrays(config: SimConfig):
    m = len(config.observables)
    kinds = np.zeros(m, dtype=np.int64)
    anchors = np.zeros((m, config.d), dtype=np.float64)
    p1 = np.zeros(m, dtype=np.float64)
    p2 = np.zeros(m, dtype=np.float64)
    occ = np.zeros(m, dtype=np.bool_)
    for i, obs in enumerate(config.observables):
        phi = obs.phi
        kinds[i] = _KIND_CODES[type(phi)]
        anchors[i] = anchor_of(phi, config.d)
        occ[i] = obs.occupation
        if isinstance(phi, Constant):
            p1[i] = phi.value
        elif isinstance(phi, Gaussian):
            p1[i] = 1.0 / (2.0 * phi.scale**2)
        elif isinstance(phi, HeatKernelProbe):
            p1[i] = 1.0 / (2.0 * phi.epsilon)
            p2[i] = (2.0 * math.pi * phi.epsilon) ** (-0.5 * config.d)
        elif isinstance(phi, InverseDistance):
            p1[i] = C3
    return kinds, anchors, p1, p2, occ


def _terminal_values(config: SimConfig, positions: np.ndarray):
    m = len(config.observables)
    values = np.zeros(m)
    clamps = np.zeros(m, dtype=np.int64)
    inv_n = 1.0 / config.n_init
    for i, obs in enumerate(config.observables):
        if positions.shape[0] == 0:
            values[i] = 0.0
            continue
        vals, clamped = obs.phi.evaluate(positions)
        values[i] = float(np.sum(vals)) * inv_n
        clamps[i] = clamped
    return values, clamps


def _replica_seed(root_seed: int, replica_index: int, salt: int = 0) -> int:
    key = (replica_index,) if salt == 0 else (replica_index, salt)
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=key)
    return int(ss.generate_state(1, np.uint32)[0])


def _replica_seeds(root_seed: int, replicas: int) -> list[int]:
    seeds = [_replica_seed(root_seed, r) for r in range(replicas)]
    # uint32 streams: deterministically re-derive any colliding entries
    seen: dict[int, int] = {}
    for r, s in enumerate(seeds):
        salt = 0
        while s in seen:
            salt += 1
            s = _replica_seed(root_seed, r, salt)
        seen[s] = r
        seeds[r] = s
    return seeds


def _simulate_stepwise(config: SimConfig, replica_index: int, seed32: int) -> Trajectory:
    d = config.d
    n_steps = config.n_steps
    q = config.branch_probability
    inv_n = 1.0 / config.n_init
    kinds, anchors, p1, p2, occ_flags = _observable_arrays(config)
    m = len(config.observables)

    snapshot_steps = [config._steps_for(s, "snapshot time") for s in config.snapshot_times]

    cap = max(4 * config.n_init, 1024)
    pos = np.zeros((cap, d))
    buf = np.empty((cap, d))
    count = config.n_init

    occ_acc = np.zeros(m)
    clamp_counts = np.zeros(m, dtype=np.int64)
    # X_0(phi) = phi(0): all initial particles at the origin
    prev_vals, _ = _terminal_values(config, np.zeros((1, d)))
    prev_vals = prev_vals * config.n_init  # phi(0) per unit mass

    _engine.seed_stream(seed32)

    snapshots: list[ParticleCloud] = []
    occ_series = np.zeros((len(snapshot_steps), m))
    extinct_step: int | None = None

    current = 0
    boundaries = sorted(set(snapshot_steps + [n_steps]))
    snap_idx = 0
    for boundary in boundaries:
        want = boundary - current
        if want > 0 and extinct_step is None:
            pos, buf, count, done, extinct = _engine.run_steps(
                pos, buf, count, d, config.dt, q, want, current, inv_n,
                kinds, anchors, p1, p2, occ_flags, occ_acc, prev_vals, clamp_counts,
            )
            if extinct:
                extinct_step = current + done
            current = boundary
        else:
            current = boundary
        while snap_idx < len(snapshot_steps) and snapshot_steps[snap_idx] <= boundary:
            snapshots.append(
                ParticleCloud(
                    time=snapshot_steps[snap_idx] * config.dt,
                    positions=pos[:count].copy(),
                    mass_per_particle=inv_n,
                )
            )
            occ_series[snap_idx] = occ_acc
            snap_idx += 1

    if config.run_to_extinction and extinct_step is None:
        # Keep integrating the registered observables past t_max until the
        # population dies out (criticality makes the expected extra work per
        # chunk constant), with a hard horizon so a lucky lineage cannot spin
        # forever.  A replica still alive at the horizon keeps extinct_at=None.
        for _ in range(EXTINCTION_HORIZON_FACTOR):
            pos, buf, count, done, extinct = _engine.run_steps(
                pos, buf, count, d, config.dt, q, n_steps, current, inv_n,
                kinds, anchors, p1, p2, occ_flags, occ_acc, prev_vals, clamp_counts,
            )
            if extinct:
                extinct_step = current + done
                current += done
                break
            current += n_steps

    terminal_positions = pos[:count].copy()
    values, term_clamps = _terminal_values(config, terminal_positions)
    clamp_counts = clamp_counts + term_clamps
    occupation = np.where(occ_flags, occ_acc, np.nan)
    terminal_cloud = None
    if config.keep_terminal_cloud:
        terminal_cloud = ParticleCloud(
            time=current * config.dt,
            positions=terminal_positions,
            mass_per_particle=inv_n,
        )
    return Trajectory(
        config=config,
        replica_index=replica_index,
        occupation=occupation,
        terminal_values=values,
        clamp_counts=clamp_counts,
        snapshots=tuple(snapshots),
        occupation_series=occ_series,
        extinct_at=None if extinct_step is None else extinct_step * config.dt,
        terminal_cloud=terminal_cloud,
    )


def _simulate_event(config: SimConfig, replica_index: int, seed32: int) -> Trajectory:
    m = len(config.observables)
    _engine.seed_stream(seed32)
    out, out_n, last_event = _engine.run_event_jump(
        config.d, config.n_init, config.dt, config.branch_probability, config.n_steps
    )
    positions = np.asarray(out[:out_n])
    values, clamps = _terminal_values(config, positions)
    terminal_cloud = None
    if config.keep_terminal_cloud:
        terminal_cloud = ParticleCloud(
            time=config.n_steps * config.dt,
            positions=positions.copy(),
            mass_per_particle=1.0 / config.n_init,
        )
    return Trajectory(
        config=config,
        replica_index=replica_index,
        occupation=np.full(m, np.nan),
        terminal_values=values,
        clamp_counts=clamps,
        snapshots=(),
        occupation_series=np.zeros((0, m)),
        extinct_at=int(last_event) * config.dt if out_n == 0 else None,
        terminal_cloud=terminal_cloud,
    )


def _run_replica(config: SimConfig, replica_index: int, seed32: int) -> Trajectory:
    if config.resolved_engine() == "stepwise":
        return _simulate_stepwise(config, replica_index, seed32)
    return _simulate_event(config, replica_index, seed32)


def simulate(config: SimConfig) -> Trajectory:
    """Single replica; identical to run_ensemble(config, 1)[0]."""
    return _run_replica(config, 0, _replica_seeds(config.seed, 1)[0])


def run_ensemble(config: SimConfig, replicas: int, threads: int = 1) -> list[Trajectory]:
    """Independent replicas 0..replicas-1; results do not depend on threads."""
    if replicas < 1:
        raise ConfigError(f"replicas must be >= 1, got {replicas!r}")
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads!r}")
    seeds = _replica_seeds(config.seed, replicas)
    if threads == 1:
        return [_run_replica(config, r, seeds[r]) for r in range(replicas)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_run_replica, config, r, seeds[r]) for r in range(replicas)
        ]
        return [f.result() for f in futures]
