import math

import numpy as np
import pytest
from scipy import stats

from glauberlab.configuration import Box, Configuration, GibbsSpec
from glauberlab.discrete import build_lattice_model
from glauberlab.dynamics import (
    BIRTH,
    DEATH,
    EventLog,
    InsufficientMixing,
    ObservableSeries,
    SimulationOverflow,
    _RateField,
    count_series,
    estimate_gap_autocorrelation,
    rayleigh_upper_bound,
    replay,
    simulate,
    simulate_lattice,
)
from glauberlab.operators import Quadrature
from glauberlab.potentials import explicit, special, zero


def free_setup(L=10.0, m=20, z=1.0):
    b = Box(L, 1)
    return GibbsSpec(zero(1), z), b, Quadrature(b, m)


def batch_se(x, batches=20):
    means = np.array([c.mean() for c in np.array_split(np.asarray(x, dtype=float), batches)])
    return means.std(ddof=1) / math.sqrt(batches)


# simulation ----------------------------------------------------------------


def test_reproducible_byte_for_byte():
    spec, b, q = free_setup()
    spec = GibbsSpec(special("exp", modulation="cos", t=1.0, a=3.0), 1.0)
    a = simulate(spec, b, q, 30.0, seed=7)
    c = simulate(spec, b, q, 30.0, seed=7)
    assert len(a) > 100
    assert a.to_bytes() == c.to_bytes()
    assert simulate(spec, b, q, 30.0, seed=8).to_bytes() != a.to_bytes()


def test_event_log_invariants():
    spec, b, q = free_setup()
    log = simulate(spec, b, q, 50.0, seed=1)
    assert np.all(np.diff(log.times) > 0)
    n = np.concatenate([[0], log.counts.astype(int)])
    steps = np.diff(n)
    assert np.all(np.abs(steps) == 1)
    assert np.all((steps == 1) == (log.kinds == BIRTH))
    assert np.all((log.locations >= 0) & (log.locations < b.L))


def test_free_count_mean():
    spec, b, q = free_setup()
    log = simulate(spec, b, q, 2000.0, seed=11)
    s = count_series(log, 0.5, burn_in=20.0)
    assert abs(s.values.mean() - 10.0) <= 3 * batch_se(s.values)


def test_pure_death_extinction_time():
    spec, b, q = free_setup()
    rng = np.random.default_rng(0)
    ends = []
    for k in range(3000):
        g0 = Configuration(rng.uniform(0, 10, (10, 1)), 1)
        log = simulate(spec, b, q, 1e6, seed=k, gamma0=g0, births=False)
        assert np.all(log.kinds == DEATH) and log.counts[-1] == 0
        ends.append(log.times[-1])
    ends = np.array(ends)
    expected = sum(1.0 / k for k in range(1, 11))  # maximum of 10 unit exponentials
    assert abs(ends.mean() - expected) <= 3 * ends.std(ddof=1) / math.sqrt(len(ends))


def test_hard_core_suppresses_close_pairs():
    b = Box(12.0, 1)
    q = Quadrature(b, 96)

    def close_fraction(pot, seed):
        log = simulate(GibbsSpec(pot, 1.0), b, q, 300.0, seed=seed)
        hits, total = 0, 0
        for g in replay(log, np.arange(20.0, 300.0, 1.0)):
            x = np.sort(g.points[:, 0])
            if len(x) > 1:
                gaps = np.diff(np.append(x, x[0] + b.L))
                hits += int(np.sum(gaps < 0.15))
                total += len(gaps)
        return hits / total

    hard = close_fraction(special("gauss", t=1.0, a=0.0), 3)
    free = close_fraction(zero(1), 3)
    assert hard < 0.1 * free


def test_overflow_is_reported():
    b = Box(6.0, 1)
    q = Quadrature(b, 12)
    spec = GibbsSpec(explicit("square_well", 1, height=-5.0, radius=2.0), 5.0)
    with pytest.raises(SimulationOverflow, match="collapse"):
        simulate(spec, b, q, 100.0, seed=0, max_particles=200)


def test_rate_field_incremental_matches_rebuild():
    b = Box(12.0, 1)
    q = Quadrature(b, 48)
    spec = GibbsSpec(special("gauss", modulation="cos", t=1.0, a=2.0), 1.3)
    field = _RateField(spec, b, q)
    assert field.local
    rng = np.random.default_rng(4)
    pts = []
    for _ in range(300):
        if pts and rng.random() < 0.4:
            x = pts.pop(int(rng.integers(len(pts))))
            field.update(x, -1)
        else:
            x = rng.uniform(0, 12, 1)
            pts.append(x)
            field.update(x, +1)
    fresh = _RateField(spec, b, q)
    fresh.rebuild(np.array(pts).reshape(-1, 1))
    np.testing.assert_allclose(field.rates(), fresh.rates(), rtol=1e-10, atol=1e-14)


def test_event_log_binary_roundtrip(tmp_path):
    spec, b, q = free_setup()
    log = simulate(spec, b, q, 20.0, seed=2, gamma0=Configuration([[1.0], [5.0]], 1))
    path = tmp_path / "events.bin"
    log.write(path)
    back = EventLog.read(path)
    assert back.to_bytes() == log.to_bytes()
    assert back.seed == 2 and back.final_time == 20.0
    np.testing.assert_array_equal(back.initial, log.initial)
    assert path.stat().st_size == len(log) * (8 + 1 + 8 + 4)
    log.write(path)  # append
    assert len(EventLog.read(path)) == 2 * len(log)


def test_replay_counts_match_log():
    spec, b, q = free_setup()
    log = simulate(spec, b, q, 40.0, seed=3)
    s = count_series(log, 0.5)
    counts = [len(g) for g in replay(log, s.times)]
    np.testing.assert_array_equal(counts, s.values)


# lattice chain -------------------------------------------------------------


def test_lattice_chain_keeps_stationary_marginals():
    spec = GibbsSpec(special("exp", modulation="cos", t=1.0, a=3.0).periodized(6.0, 1), 1.0)
    model = build_lattice_model(Box(6.0, 1), 6, 1, spec)
    traj = simulate_lattice(model, seed=5, n_events=100_000)
    exact = model.weights @ model.states
    for i in range(model.n_cells):
        s = traj.sample(model.states[:, i], 0.05)
        assert abs(s.values.mean() - exact[i]) <= 3 * batch_se(s.values)


# estimators -------------------------------------------------------------------


def test_white_noise_is_resolution_limited():
    x = np.random.default_rng(0).normal(size=20_000)
    est = estimate_gap_autocorrelation(ObservableSeries(np.arange(len(x)) * 0.1, x))
    assert est.resolution_limited
    assert est.rate >= 1 / 0.1


def test_autoregressive_rate_recovered():
    lam, dt, n = 0.8, 0.1, 200_000
    rng = np.random.default_rng(1)
    a = math.exp(-lam * dt)
    x = np.empty(n)
    x[0] = 0.0
    noise = rng.normal(scale=math.sqrt(1 - a * a), size=n)
    for k in range(1, n):
        x[k] = a * x[k - 1] + noise[k]
    est = estimate_gap_autocorrelation(ObservableSeries(np.arange(n) * dt, x))
    assert est.rate == pytest.approx(lam, rel=0.05)
    assert est.ci[0] <= est.rate <= est.ci[1]


def test_free_count_decays_at_rate_one():
    spec, b, q = free_setup()
    log = simulate(spec, b, q, 3000.0, seed=21)
    est = estimate_gap_autocorrelation(count_series(log, 0.1, burn_in=20.0))
    assert est.rate == pytest.approx(1.0, rel=0.15)


def test_trend_is_rejected():
    t = np.arange(5000) * 0.1
    with pytest.raises(InsufficientMixing, match="insufficient mixing"):
        estimate_gap_autocorrelation(ObservableSeries(t, t.copy()))
    with pytest.raises(InsufficientMixing):
        estimate_gap_autocorrelation(ObservableSeries(t, np.ones_like(t)))


def test_series_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        ObservableSeries([0.0], [1.0])
    s = ObservableSeries([0.0, 0.1, 0.2], [1.0, 2.0, 0.5], "N")
    s.to_csv(tmp_path / "s.csv")
    back = ObservableSeries.from_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.values, s.values)
    assert back.name == "N" and back.dt == pytest.approx(0.1)


def test_rayleigh_free_count_ratio_is_one():
    spec, b, q = free_setup()
    rng = np.random.default_rng(2)
    samples = [Configuration(rng.uniform(0, 10, (rng.poisson(10.0), 1)), 1) for _ in range(4000)]
    est = rayleigh_upper_bound(spec, b, q, len, samples)
    assert abs(est.ratio - 1.0) <= 3 * est.stderr
    assert est.dirichlet == pytest.approx(10.0)


def test_rayleigh_constant_is_degenerate():
    spec, b, q = free_setup()
    samples = [Configuration(np.full((k, 1), 1.0 + k), 1) for k in range(5)]
    with pytest.raises(ValueError, match="degenerate"):
        rayleigh_upper_bound(spec, b, q, lambda g: 3.0, samples)


def test_rayleigh_special_class_not_below_one():
    b = Box(8.0, 1)
    q = Quadrature(b, 32)
    spec = GibbsSpec(special("gauss", modulation="cos", t=1.0, a=2.0).periodized(8.0, 1), 1.5)
    log = simulate(spec, b, q, 2000.0, seed=9)
    samples = list(replay(log, np.arange(20.0, 2000.0, 4.0)))
    est = rayleigh_upper_bound(spec, b, q, len, samples)
    assert est.ratio >= 1.0 - 3 * est.stderr


def test_chi_square_free_counts():
    spec, b, q = free_setup(L=4.0, m=8, z=1.0)
    log = simulate(spec, b, q, 4000.0, seed=13)
    counts = count_series(log, 5.0, burn_in=10.0).values.astype(int)
    cut = 9
    obs = np.bincount(np.minimum(counts, cut), minlength=cut + 1)
    p = stats.poisson.pmf(np.arange(cut), 4.0)
    p = np.append(p, 1 - p.sum())
    assert stats.chisquare(obs, p * obs.sum()).pvalue > 0.01
