"""Tests for noise paths and multiplicative coefficients."""

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sgflow.constants import REGULARITY_BOUND, Modulation, NoiseCol, NoiseKind
from sgflow.noise import (
    DiffusionCoefficient,
    NoisePath,
    NoiseSpec,
    multiplicative_increment,
    regularity_report,
    sample_path,
    wiener_amplitudes,
)
from sgflow.presets import sample_states
from sgflow.spectral import GridDomain, SpectralSpace


@pytest.fixture
def space():
    return SpectralSpace(GridDomain(1, 8))


@pytest.fixture
def wiener():
    return NoiseSpec(NoiseKind.WIENER, sigma=10.0, rho=2.0)


def test_spec_dict(wiener):
    data = wiener.to_dict()
    assert data["kind"] == "TraceClassWiener"
    assert NoiseSpec.from_dict(data) == wiener
    assert wiener.with_kind("Zero").kind == NoiseKind.ZERO


def test_same_seed_same_path(space, wiener):
    a = sample_path(space, wiener, seed=11, dt=0.01, n_steps=50)
    b = sample_path(space, wiener, seed=11, dt=0.01, n_steps=50)
    c = sample_path(space, wiener, seed=12, dt=0.01, n_steps=50)
    assert_array_equal(a.coefficients, b.coefficients)
    assert not np.array_equal(a.coefficients, c.coefficients)
    assert a.horizon == pytest.approx(0.5)


def test_zero_path(space):
    path = sample_path(space, NoiseSpec(), seed=0, dt=0.1, n_steps=5)
    assert path.kind == NoiseKind.ZERO
    assert not np.any(path.coefficients)
    assert path.standard is None


def test_wiener_variance(space, wiener):
    dt = 0.01
    path = sample_path(space, wiener, seed=5, dt=dt, n_steps=20000, modes=3)
    expected = dt * wiener_amplitudes(space, 10.0, 2.0, 3) ** 2
    ratio = path.coefficients.var(axis=0) / expected
    assert np.all(np.abs(ratio - 1.0) < 0.1)
    assert path.coefficients.shape == (20000, 3)


def test_poisson_acts_on_jump_modes(space):
    spec = NoiseSpec(NoiseKind.POISSON, rate=50.0, jump_modes=(2,), jump_scale=1.0)
    path = sample_path(space, spec, seed=3, dt=0.01, n_steps=1000)
    assert path.jump_counts.sum() > 0
    assert np.any(path.coefficients[:, 1])
    assert not np.any(np.delete(path.coefficients, 1, axis=1))
    assert not np.any(path.coefficients[path.jump_counts == 0])


def test_sample_path_errors(space, wiener):
    with pytest.raises(ValueError):
        sample_path(space, wiener, seed=0, dt=0.0, n_steps=5)
    with pytest.raises(ValueError):
        sample_path(space, wiener, seed=0, dt=0.1, n_steps=0)
    with pytest.raises(ValueError):
        sample_path(space, wiener, seed=0, dt=0.1, n_steps=5, modes=9)
    bad = NoiseSpec(NoiseKind.POISSON, rate=1.0, jump_modes=(9,), jump_scale=1.0)
    with pytest.raises(ValueError):
        sample_path(space, bad, seed=0, dt=0.1, n_steps=5)


def test_path_views(space, wiener):
    path = sample_path(space, wiener, seed=2, dt=0.01, n_steps=8)
    assert_allclose(path.cumulative_coefficients()[-1], path.coefficients.sum(axis=0))
    assert_allclose(path.increment(3), path.basis @ path.coefficients[3])
    projected = path.project(2)
    assert projected.n_modes == 2
    assert_array_equal(projected.coefficients, path.coefficients[:, :2])
    shifted = path.shift(5)
    assert shifted.n_steps == 3
    assert_array_equal(shifted.coefficients, path.coefficients[5:])
    coarse = path.coarsen(4)
    assert coarse.dt == pytest.approx(0.04)
    assert_allclose(coarse.coefficients[1], path.coefficients[4:].sum(axis=0))
    assert_allclose(coarse.cumulative()[-1], path.cumulative()[-1])
    with pytest.raises(ValueError):
        path.coarsen(3)
    with pytest.raises(ValueError):
        path.project(0)


def test_noise_csv_replay(space, wiener, tmp_path):
    path = sample_path(space, wiener, seed=9, dt=0.02, n_steps=6, modes=4)
    out = tmp_path / "noise.csv"
    path.write_csv(str(out))
    df = pd.read_csv(out)
    assert list(df.columns) == NoiseCol.cols
    assert len(df) == 24
    replay = NoisePath.read_csv(str(out), space)
    assert replay.dt == pytest.approx(0.02)
    assert_array_equal(replay.coefficients, path.coefficients)


def test_noise_csv_missing_column(space, tmp_path):
    out = tmp_path / "bad.csv"
    pd.DataFrame({NoiseCol.K: [0], NoiseCol.T: [0.0]}).to_csv(out, index=False)
    with pytest.raises(ValueError):
        NoisePath.read_csv(str(out), space)


def test_regularity_certificate(space):
    smooth = sample_path(space, NoiseSpec(NoiseKind.WIENER, sigma=1.0, rho=2.0), 1, 0.01, 100)
    rough = sample_path(space, NoiseSpec(NoiseKind.WIENER, sigma=1.0, rho=1.5), 1, 0.01, 100)
    assert regularity_report(smooth).certifies_hyp_g
    assert regularity_report(smooth).critical_rho == pytest.approx(1.75)
    assert not regularity_report(rough).certifies_hyp_g
    assert regularity_report(smooth).l2_T32_norm > 0
    loud = sample_path(space, NoiseSpec(NoiseKind.WIENER, sigma=1e10, rho=2.0), 1, 0.01, 100)
    report = regularity_report(loud)
    assert report.l2_T32_norm > REGULARITY_BOUND * np.sqrt(loud.n_modes)
    assert not report.certifies_hyp_g
    assert regularity_report(sample_path(space, NoiseSpec(), 1, 0.01, 100)).certifies_hyp_g


def test_modulations(space):
    x = np.sin(np.pi * space.grid.coordinates()[:, 0])
    norm = space.norm_H(x)
    const = DiffusionCoefficient(space, 10.0, 2.0)
    assert const.beta(x) == 1.0
    assert const.default_window(0.1) == 0.1
    sat = DiffusionCoefficient(space, 10.0, 2.0, modulation=Modulation.SATURATING)
    assert sat.beta(x) == pytest.approx(1.0 / (1.0 + norm))
    expected = min(0.1, 1.0 / (4.0 * np.sum(sat.amplitudes**2)))
    assert sat.default_window(0.1) == pytest.approx(expected)
    affine = DiffusionCoefficient(
        space, 10.0, 2.0, modulation=Modulation.AFFINE_CLIPPED, a=0.5, b=10.0, clip=2.0
    )
    assert affine.beta(x) == pytest.approx(min(0.5 + 10.0 * norm, 2.0))
    assert affine.beta_max == 2.0
    with pytest.raises(ValueError):
        DiffusionCoefficient(space, 1.0, 2.0, modulation=Modulation.AFFINE_CLIPPED, clip=0.0)


@pytest.mark.parametrize("modulation", list(Modulation))
def test_declared_constants_hold(space, modulation):
    coeff = DiffusionCoefficient(space, 10.0, 2.0, modulation=modulation, b=0.5, clip=2.0)
    samples = sample_states(space, 12, seed=4, radius=3.0)
    assert coeff.verify_hypotheses(samples) == {
        "growth": True,
        "lipschitz": True,
        "s_growth": True,
    }


def test_constant_coefficient_matches_additive(space, wiener):
    path = sample_path(space, wiener, seed=6, dt=0.01, n_steps=4)
    coeff = DiffusionCoefficient(space, 10.0, 2.0)
    x = np.ones(space.size)
    for k in range(path.n_steps):
        inc = multiplicative_increment(coeff, x, path.standard[k], path.basis)
        assert_array_equal(inc, path.increment(k))
