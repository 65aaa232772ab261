"""Tests for the long-time diagnostics."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sgflow.constants import ErgodicCol, Form, GraphKind, NoiseKind, SviCol, TripleMode
from sgflow.drift import DriftOperator
from sgflow.ergodics import (
    ErgodicComparison,
    ExtinctionReport,
    OccupationEstimate,
    TestFunctional,
    concentration_check,
    default_functionals,
    eproperty_check,
    evaluate,
    extinction_time,
    fit_power_law,
    lipschitz_ratio,
    occupation_average,
    plasma_decay_bound,
    stochastic_stability,
    svi_check,
    weak_law_check,
)
from sgflow.evolve import SolverConfig, solve_additive, zero_path
from sgflow.graphs import ScalarGraph
from sgflow.noise import NoiseSpec
from sgflow.presets import initial_state, sample_states
from sgflow.spectral import GridDomain, SpectralSpace


@pytest.fixture
def space():
    return SpectralSpace(GridDomain(1, 8))


@pytest.fixture
def op(space):
    return DriftOperator(space, ScalarGraph(GraphKind.ARCTAN), Form.DIVERGENCE)


@pytest.fixture
def cfg():
    """Eight steps, the minimum for time batching."""
    return SolverConfig(dt=0.05, horizon=0.4)


@pytest.fixture
def wiener():
    return NoiseSpec(NoiseKind.WIENER, sigma=10.0, rho=2.0)


@pytest.fixture
def x0(space):
    return 0.5 * initial_state(space, "sine")


def test_functional_definitions(space):
    assert TestFunctional("coordinate", mode=2).name == "coord_2"
    assert TestFunctional("clipped_norm", level=0.5).name == "norm_min_0.5"
    assert TestFunctional("ball", level=1.0, width=0.5).lipschitz == 2.0
    assert TestFunctional("constant", level=3.0).lipschitz == 0.0
    with pytest.raises(ValueError):
        TestFunctional("coordinate", mode=0)
    with pytest.raises(ValueError):
        TestFunctional("ball", width=0.0)
    e1 = space.eigenvectors[:, 0]
    assert TestFunctional("coordinate", mode=1)(space, e1) == pytest.approx(np.tanh(1.0))
    assert TestFunctional("clipped_norm", level=1.0)(space, 3.0 * e1) == pytest.approx(1.0)
    assert TestFunctional("ball", level=1.0, width=0.5)(space, 1.25 * e1) == pytest.approx(0.5)
    assert TestFunctional("constant", level=3.0)(space, e1) == 3.0


def test_default_functionals_are_lipschitz(space):
    functionals = default_functionals(space)
    assert len(functionals) == 8
    assert len({f.name for f in functionals}) == 8
    xs = sample_states(space, 30, seed=1, radius=2.0)
    ys = sample_states(space, 30, seed=2, radius=2.0)
    for f in functionals:
        assert lipschitz_ratio(space, f, xs, ys) <= f.lipschitz + 1e-12
    values = evaluate(space, functionals, xs)
    assert values.shape == (30, 8)
    assert np.all(np.abs(values) <= 1.0 + 1e-12)


def test_occupation_estimate_batches():
    means = np.arange(16.0).reshape(8, 2)
    est = OccupationEstimate(["a", "b"], 1.0, list(range(8)), means, np.zeros((8, 8, 2)))
    assert_allclose(est.estimate, means.mean(axis=0))
    assert_allclose(est.stderr, means.std(axis=0, ddof=1) / np.sqrt(8))
    small = OccupationEstimate(["a", "b"], 1.0, [0], means[:1], np.ones((1, 8, 2)))
    assert_allclose(small.stderr, 0.0)
    merged = small.merge(small)
    assert merged.n_paths == 2
    assert merged.batch_values.shape == (16, 2)
    with pytest.raises(ValueError):
        small.merge(OccupationEstimate(["a", "b"], 2.0, [0], means[:1], np.ones((1, 8, 2))))
    assert list(est.to_frame().columns) == ErgodicCol.occupation_cols


def test_occupation_average_deterministic(op, x0, cfg):
    functionals = [TestFunctional("constant", level=0.7), TestFunctional("clipped_norm", level=10.0)]
    est = occupation_average(op, NoiseSpec(), x0, functionals, cfg, 8, 0, show_progress=False)
    assert est.n_paths == 8
    assert est.estimate[0] == pytest.approx(0.7)
    traj = solve_additive(op, x0, zero_path(op, cfg.dt, cfg.n_steps), cfg)
    assert est.estimate[1] == pytest.approx(traj.norms_H[:-1].mean())
    assert_allclose(est.stderr, 0.0, atol=1e-12)


def test_occupation_average_errors(op, x0):
    short = SolverConfig(dt=0.1, horizon=0.4)
    functionals = [TestFunctional("constant")]
    with pytest.raises(ValueError):
        occupation_average(op, NoiseSpec(), x0, functionals, short, 0, 0)
    with pytest.raises(ValueError):
        occupation_average(op, NoiseSpec(), x0, functionals, short, 4, 0)


def test_occupation_average_independent_of_workers(op, x0, cfg, wiener):
    functionals = default_functionals(op.space)
    serial = occupation_average(op, wiener, x0, functionals, cfg, 4, 17, workers=1, show_progress=False)
    pooled = occupation_average(op, wiener, x0, functionals, cfg, 4, 17, workers=2, show_progress=False)
    assert_array_equal(serial.path_means, pooled.path_means)
    assert serial.seeds == pooled.seeds
    other = occupation_average(op, wiener, x0, functionals, cfg, 4, 18, show_progress=False)
    assert not np.array_equal(serial.path_means, other.path_means)


def test_comparison_of_starts(op, x0, cfg, wiener):
    functionals = default_functionals(op.space)
    a = occupation_average(op, wiener, x0, functionals, cfg, 8, 3, show_progress=False)
    same = ErgodicComparison(a, a)
    assert_allclose(same.gaps, 0.0)
    assert same.within.all()


def test_weak_law_on_deterministic_flow(op, x0, cfg):
    table = weak_law_check(op, NoiseSpec(), x0, default_functionals(op.space), cfg, (1, 2))
    assert table[ErgodicCol.HOLDS].all()
    assert_allclose(table["gap"], 0.0)


def test_eproperty_and_stability(op, x0, cfg, wiener):
    f = TestFunctional("coordinate", mode=1)
    y = -x0
    res = eproperty_check(op, wiener, f, x0, y, 0.2, cfg, 4, 0)
    assert res.bound == pytest.approx(op.space.norm_H(x0 - y))
    assert res.holds
    stable = stochastic_stability(op, NoiseSpec(), x0, cfg, 1e-12, 3, 0)
    assert stable.fraction == 1.0
    assert stable.hits == 3


def test_concentration_markov_bound(space, cfg):
    l2 = SpectralSpace(space.grid, TripleMode.L2_OVER_HM1)
    plasma = DriftOperator(l2, ScalarGraph(GraphKind.LOG_PLASMA), Form.DIFFUSION)
    x = initial_state(l2, "random", seed=1, amplitude=2.0)
    spec = NoiseSpec(NoiseKind.WIENER, sigma=100.0, rho=2.0)
    table = concentration_check(plasma, spec, x, [0.01, 0.1, 1.0], cfg, 3, 0)
    assert list(table.columns) == ErgodicCol.concentration_cols
    assert table[ErgodicCol.HOLDS].all()
    with pytest.raises(ValueError):
        concentration_check(plasma, spec, x, [0.0], cfg, 3, 0)


def test_extinction_report_of_heat_flow(space, x0):
    heat = DriftOperator(space, ScalarGraph(GraphKind.POWER, p=2.0), Form.DIVERGENCE)
    cfg = SolverConfig(dt=0.01, horizon=0.1)
    traj = solve_additive(heat, x0, zero_path(heat, cfg.dt, cfg.n_steps), cfg)
    report = extinction_time(heat, traj)
    assert math.isinf(report.time)
    assert report.step is None
    assert report.c_hat >= 2.0 * space.eigenvalues[0] * (1 - 1e-6)
    assert math.isinf(report.bound)
    bounded = extinction_time(heat, traj, alpha=1.5)
    assert math.isfinite(bounded.bound)
    assert not bounded.holds
    assert bounded.to_dict()["holds"] is False


def test_extinction_report_holds():
    assert ExtinctionReport(1.0, 10, 2.0, 1.0).holds
    assert not ExtinctionReport(1.1, 11, 2.0, 1.0).holds


def test_fit_power_law():
    t = np.linspace(0.5, 10.0, 60)
    assert fit_power_law(t, 3.0 * t**-1.5, (1.0, 10.0)) == pytest.approx(-1.5)
    with pytest.raises(ValueError):
        fit_power_law(t, t, (0.0, 1.0))
    with pytest.raises(ValueError):
        fit_power_law(t, t, (1.0, 20.0))
    with pytest.raises(ValueError):
        fit_power_law(t, t, (1.0, 10.0), floor=100.0)


def test_plasma_decay_bound(space):
    l2 = SpectralSpace(space.grid, TripleMode.L2_OVER_HM1)
    plasma = DriftOperator(l2, ScalarGraph(GraphKind.LOG_PLASMA), Form.DIFFUSION)
    x = initial_state(l2, "random", seed=4, amplitude=5.0)
    cfg = SolverConfig(dt=0.05, horizon=0.5)
    traj = solve_additive(plasma, x, zero_path(plasma, cfg.dt, cfg.n_steps), cfg)
    table, holds = plasma_decay_bound(plasma, traj)
    assert holds
    assert len(table) == cfg.n_steps + 1
    assert np.all(np.diff(table["gauge"].to_numpy()) <= 1e-9)


def test_svi_on_smooth_drift(op, x0, cfg, wiener):
    z0 = np.zeros(op.space.size)
    table = svi_check(op, wiener, x0, z0, cfg, 3, 0)
    assert list(table.columns) == SviCol.cols
    assert len(table) == 3
    assert table[SviCol.HOLDS].all()
