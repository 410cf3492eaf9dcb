"""Engine-level checks: configuration validation, determinism, exact
trapezoid accounting against snapshot replays, and law agreement between
the stepwise and event drivers."""

import math

import numpy as np
import pytest

from sbmlab.errors import ConfigError, DomainError, UnregisteredObservableError
from sbmlab.probes import (
    Constant,
    Gaussian,
    HeatKernelProbe,
    LogDistance,
    RadialFunction,
)
from sbmlab.simulate import (
    Observable,
    SimConfig,
    init,
    run_ensemble,
    simulate,
    step,
)

CONST = Observable(Constant(1.0), occupation=True)


def small_config(**kw):
    base = dict(d=2, n_init=20, dt=2e-3, t_max=0.1, seed=11)
    base.update(kw)
    return SimConfig(**base)


# ---------------------------------------------------------------- config


def test_config_validation_errors():
    with pytest.raises(ConfigError):
        small_config(d=4)
    with pytest.raises(ConfigError):
        small_config(n_init=0)
    with pytest.raises(ConfigError):
        small_config(dt=-1e-3)
    with pytest.raises(ConfigError):
        small_config(t_max=0.0)
    with pytest.raises(ConfigError):
        small_config(seed=-1)
    with pytest.raises(ConfigError):
        small_config(seed=2**64)
    # branching probability per step must stay small
    with pytest.raises(ConfigError):
        small_config(n_init=500, dt=2e-3)
    # horizon and snapshots must sit on the step lattice
    with pytest.raises(ConfigError):
        small_config(t_max=0.1001)
    with pytest.raises(ConfigError):
        small_config(snapshot_times=(0.0501,))
    with pytest.raises(ConfigError):
        small_config(snapshot_times=(0.08, 0.04))
    with pytest.raises(ConfigError):
        small_config(snapshot_times=(0.2,))
    with pytest.raises(ConfigError):
        small_config(observables=(Constant(1.0),))  # not wrapped
    with pytest.raises(ConfigError):
        small_config(engine="exact")


def test_config_rejects_oracle_only_probes():
    probe = RadialFunction((0.0, 0.0), lambda r: np.exp(-r))
    with pytest.raises(ConfigError):
        small_config(observables=(Observable(probe),))


def test_config_rejects_anchor_dimension_mismatch():
    phi = Gaussian(center=(0.5, 0.0, 0.0))
    with pytest.raises(DomainError):
        small_config(d=2, observables=(Observable(phi),))


def test_event_engine_capability_limits():
    with pytest.raises(ConfigError):
        small_config(engine="event", observables=(CONST,))
    with pytest.raises(ConfigError):
        small_config(engine="event", snapshot_times=(0.05,))
    with pytest.raises(ConfigError):
        small_config(engine="event", run_to_extinction=True)


def test_engine_resolution():
    assert small_config().resolved_engine() == "event"
    assert small_config(observables=(CONST,)).resolved_engine() == "stepwise"
    assert small_config(snapshot_times=(0.05,)).resolved_engine() == "stepwise"
    assert small_config(run_to_extinction=True).resolved_engine() == "stepwise"
    assert small_config(engine="stepwise").resolved_engine() == "stepwise"


def test_branch_probability_and_steps():
    cfg = small_config(n_init=20, dt=2e-3, t_max=0.1)
    assert cfg.branch_probability == -math.expm1(-0.04)
    assert cfg.n_steps == 50


# ------------------------------------------------------- reference pieces


def test_init_is_point_mass():
    cloud = init(small_config(n_init=7, dt=1e-3))
    assert cloud.time == 0.0
    assert cloud.count == 7
    assert cloud.total_mass == pytest.approx(1.0)
    assert not cloud.positions.any()


def test_reference_step_bounds():
    cfg = small_config(n_init=50, dt=2e-3)
    rng = np.random.default_rng(3)
    cloud = init(cfg)
    for _ in range(5):
        nxt = step(cloud, cfg, rng)
        assert nxt.time == pytest.approx(cloud.time + cfg.dt)
        assert 0 <= nxt.count <= 2 * max(cloud.count, 1)
        assert nxt.positions.shape == (nxt.count, cfg.d)
        assert nxt.mass_per_particle == cloud.mass_per_particle
        cloud = nxt
    empty = step(
        cloud.__class__(cloud.time, np.zeros((0, cfg.d)), cloud.mass_per_particle),
        cfg,
        rng,
    )
    assert empty.count == 0
    assert empty.time == pytest.approx(cloud.time + cfg.dt)


# ----------------------------------------------------------- determinism


def test_same_seed_reproduces_exactly():
    cfg = small_config(
        d=3,
        observables=(CONST, Observable(Gaussian(scale=0.8), occupation=True)),
        snapshot_times=(0.05, 0.1),
    )
    a = run_ensemble(cfg, 3)
    b = run_ensemble(cfg, 3)
    for ta, tb in zip(a, b):
        np.testing.assert_array_equal(ta.occupation, tb.occupation)
        np.testing.assert_array_equal(ta.terminal_values, tb.terminal_values)
        assert ta.extinct_at == tb.extinct_at
        for sa, sb in zip(ta.snapshots, tb.snapshots):
            np.testing.assert_array_equal(sa.positions, sb.positions)


def test_replica_streams_are_prefix_stable():
    cfg = small_config(d=3)
    few = run_ensemble(cfg, 3)
    many = run_ensemble(cfg, 7)
    for ta, tb in zip(few, many):
        np.testing.assert_array_equal(ta.terminal_values, tb.terminal_values)


def test_simulate_matches_first_replica():
    cfg = small_config(observables=(CONST,))
    one = simulate(cfg)
    ens = run_ensemble(cfg, 2)
    np.testing.assert_array_equal(one.occupation, ens[0].occupation)
    np.testing.assert_array_equal(one.terminal_values, ens[0].terminal_values)


def test_thread_count_does_not_change_results():
    cfg = small_config(d=3, observables=(CONST,), snapshot_times=(0.1,))
    serial = run_ensemble(cfg, 4, threads=1)
    pooled = run_ensemble(cfg, 4, threads=2)
    for ta, tb in zip(serial, pooled):
        np.testing.assert_array_equal(ta.occupation, tb.occupation)
        np.testing.assert_array_equal(ta.terminal_values, tb.terminal_values)
        np.testing.assert_array_equal(
            ta.snapshots[0].positions, tb.snapshots[0].positions
        )


def test_ensemble_argument_validation():
    cfg = small_config()
    with pytest.raises(ConfigError):
        run_ensemble(cfg, 0)
    with pytest.raises(ConfigError):
        run_ensemble(cfg, 2, threads=0)


# ------------------------------------------- exact occupation accounting


def test_occupation_matches_trapezoid_of_snapshots():
    # Snapshot every step and rebuild each occupation integral by hand;
    # the streamed accumulator must agree to rounding.
    dt = 2.5e-3
    obs = (
        CONST,
        Observable(Gaussian(center=(0.0, 0.0), scale=0.7), occupation=True),
        Observable(HeatKernelProbe((0.25, 0.1), 0.01), occupation=True),
    )
    cfg = SimConfig(
        d=2,
        n_init=40,
        dt=dt,
        t_max=10 * dt,
        seed=909,
        observables=obs,
        snapshot_times=tuple(dt * k for k in range(1, 11)),
    )
    tr = simulate(cfg)
    inv_n = 1.0 / cfg.n_init
    prev = np.array([o.phi.evaluate(np.zeros((1, 2)))[0].sum() for o in obs])
    acc = np.zeros(len(obs))
    for k, snap in enumerate(tr.snapshots):
        vals = np.array(
            [o.phi.evaluate(snap.positions)[0].sum() * inv_n for o in obs]
        )
        acc += 0.5 * dt * (prev + vals)
        np.testing.assert_allclose(tr.occupation_series[k], acc, rtol=1e-10)
        prev = vals
    np.testing.assert_allclose(tr.occupation, acc, rtol=1e-10)
    # nonnegative integrands accumulate monotonically
    diffs = np.diff(tr.occupation_series, axis=0)
    assert (diffs >= -1e-15).all()


def test_snapshot_at_time_zero_is_initial_cloud():
    cfg = small_config(snapshot_times=(0.0, 0.05), observables=(CONST,))
    tr = simulate(cfg)
    first = tr.snapshots[0]
    assert first.time == 0.0
    assert first.count == cfg.n_init
    assert not first.positions.any()
    assert tr.occupation_series[0] == pytest.approx(0.0)


def test_terminal_cloud_bookkeeping():
    cfg = small_config(keep_terminal_cloud=True, observables=(CONST,))
    tr = simulate(cfg)
    assert tr.terminal_cloud is not None
    assert tr.terminal_cloud.time == pytest.approx(cfg.t_max)
    assert tr.terminal_cloud.total_mass == pytest.approx(
        tr.terminal_value(Constant(1.0))
    )


def test_unregistered_observable_lookup_fails():
    cfg = small_config(observables=(CONST,))
    tr = simulate(cfg)
    assert tr.occupation_value(Constant(1.0)) >= 0.0
    gauss2 = Gaussian(center=(0.0, 0.0), scale=0.5)
    with pytest.raises(UnregisteredObservableError):
        tr.occupation_value(gauss2)
    with pytest.raises(UnregisteredObservableError):
        tr.terminal_value(LogDistance(anchor=(0.5, 0.0)))
    # registered for terminal reads only, not for the streamed integral
    cfg2 = small_config(observables=(Observable(gauss2),))
    tr2 = simulate(cfg2)
    with pytest.raises(UnregisteredObservableError):
        tr2.occupation_value(gauss2)


# ---------------------------------------------------------- law checks


def test_total_mass_is_a_martingale():
    cfg = SimConfig(
        d=2, n_init=100, dt=1e-3, t_max=0.5, seed=2024,
        observables=(Observable(Constant(1.0)),),
    )
    trs = run_ensemble(cfg, 200)
    masses = np.array([tr.terminal_value(Constant(1.0)) for tr in trs])
    # masses live on the 1/N lattice
    np.testing.assert_allclose(masses * cfg.n_init, np.round(masses * cfg.n_init))
    assert (masses >= 0.0).all()
    b = cfg.branch_probability / (cfg.n_init * cfg.dt)
    se = math.sqrt(b * cfg.t_max / len(trs))
    assert abs(masses.mean() - 1.0) < 3.0 * se


def test_event_and_stepwise_agree_in_law():
    gauss = Gaussian(scale=1.0)
    common = dict(d=3, n_init=50, dt=2e-3, t_max=0.5, seed=7171,
                  observables=(Observable(Constant(1.0)), Observable(gauss)))
    ev = run_ensemble(SimConfig(engine="event", **common), 300)
    st = run_ensemble(SimConfig(engine="stepwise", **common), 300)
    for phi, oracle in ((Constant(1.0), 1.0), (gauss, (1.0 / 1.5) ** 1.5)):
        a = np.array([tr.terminal_value(phi) for tr in ev])
        b = np.array([tr.terminal_value(phi) for tr in st])
        se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
        assert abs(a.mean() - b.mean()) < 3.0 * se
        assert abs(a.mean() - oracle) < 3.0 * math.sqrt(a.var(ddof=1) / a.size)
        ratio = a.var(ddof=1) / b.var(ddof=1)
        assert 0.6 < ratio < 1.6


def test_run_to_extinction():
    cfg = SimConfig(
        d=2,
        n_init=25,
        dt=4e-3,
        t_max=0.5,
        seed=555,
        observables=(CONST,),
        run_to_extinction=True,
    )
    trs = run_ensemble(cfg, 16)
    for tr in trs:
        assert tr.extinct_at is not None
        assert tr.extinct_at > 0.0
        # extinction time sits on the step lattice
        k = tr.extinct_at / cfg.dt
        assert k == pytest.approx(round(k), abs=1e-9)
        assert tr.terminal_value(Constant(1.0)) == 0.0
        assert math.isfinite(tr.occupation_value(Constant(1.0)))
        assert tr.occupation_value(Constant(1.0)) > 0.0
    times = [tr.extinct_at for tr in trs]
    assert min(times) < cfg.t_max  # one replica dies before the horizon
    assert max(times) > cfg.t_max  # and most die well after it


def test_event_engine_reports_extinction():
    cfg = SimConfig(d=2, n_init=5, dt=0.02, t_max=40.0, seed=98, engine="event")
    trs = run_ensemble(cfg, 12)
    died = [tr for tr in trs if tr.extinct_at is not None]
    assert died, "no extinction at a 40x horizon with 5 initial particles"
    for tr in died:
        assert tr.terminal_values.size == 0 or not tr.terminal_values.any()
        assert 0.0 < tr.extinct_at <= cfg.t_max
