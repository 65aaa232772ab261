"""Tests for the discrete Gelfand triples."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgflow.constants import BoundaryCondition, TripleMode
from sgflow.spectral import GridDomain, SpectralSpace


@pytest.fixture
def space_1d():
    """H1 over L2 triple on a 1D Dirichlet grid."""
    return SpectralSpace(GridDomain(1, 16))


@pytest.fixture
def space_2d():
    """L2 over H-1 triple on a 2D Dirichlet grid."""
    return SpectralSpace(GridDomain(2, 6), TripleMode.L2_OVER_HM1)


@pytest.fixture
def vector(space_1d):
    rng = np.random.default_rng(3)
    return rng.standard_normal(space_1d.size)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridDomain(3, 8)
    with pytest.raises(ValueError):
        GridDomain(1, 1)
    grid = GridDomain(2, 4, "NeumannMeanZero")
    assert grid.bc == BoundaryCondition.NEUMANN_MEAN_ZERO
    assert grid.size == 16
    assert grid.h == pytest.approx(0.2)
    assert grid.coordinates().shape == (16, 2)
    assert grid == GridDomain(2, 4, BoundaryCondition.NEUMANN_MEAN_ZERO)


@pytest.mark.parametrize(
    "grid",
    [
        GridDomain(1, 12),
        GridDomain(1, 12, BoundaryCondition.NEUMANN_MEAN_ZERO),
        GridDomain(2, 5),
        GridDomain(2, 5, BoundaryCondition.NEUMANN_MEAN_ZERO),
    ],
)
def test_eigenpairs_match_stencil(grid):
    space = SpectralSpace(grid)
    vec, lam = space.eigenvectors, space.eigenvalues
    assert np.all(np.diff(lam) >= 0)
    assert lam[0] > 0
    assert_allclose(space.laplacian @ vec, vec * lam, atol=1e-8 * lam.max())
    gram = grid.cell_weight * vec.T @ vec
    assert_allclose(gram, np.eye(space.n_modes), atol=1e-10)


def test_neumann_drops_constant_mode():
    space = SpectralSpace(GridDomain(1, 10, BoundaryCondition.NEUMANN_MEAN_ZERO))
    assert space.n_modes == 9
    assert_allclose(space.coefficients(np.ones(10)), 0.0, atol=1e-12)
    v = np.arange(10.0)
    assert space.project_mean_zero(v).mean() == pytest.approx(0.0, abs=1e-12)


def test_n_modes_validation():
    with pytest.raises(ValueError):
        SpectralSpace(GridDomain(1, 8), n_modes=9)
    with pytest.raises(ValueError):
        SpectralSpace(GridDomain(1, 8), n_modes=0)


def test_check_vector(space_1d):
    with pytest.raises(ValueError):
        space_1d.check_vector(np.zeros(5))
    with pytest.raises(ValueError):
        space_1d.synthesize(np.zeros(3))


def test_parseval(space_1d, vector):
    coef = space_1d.coefficients(vector)
    assert_allclose(space_1d.synthesize(coef), vector, atol=1e-12)
    assert space_1d.grid.inner(vector, vector) == pytest.approx(np.sum(coef**2))


def test_h1_over_l2_norms(space_1d, vector):
    norm_s, norm_h, _ = space_1d.norms(vector)
    assert norm_h == pytest.approx(np.sqrt(space_1d.grid.inner(vector, vector)))
    grad = space_1d.gradient @ vector
    assert norm_s == pytest.approx(np.sqrt(space_1d.grid.cell_weight * grad @ grad))
    assert norm_h <= space_1d.embedding_constant * norm_s * (1 + 1e-12)


def test_l2_over_hm1_norms(space_2d):
    rng = np.random.default_rng(5)
    v = rng.standard_normal(space_2d.size)
    norm_s, norm_h, norm_d = space_2d.norms(v)
    assert norm_s == pytest.approx(np.sqrt(space_2d.grid.inner(v, v)))
    assert norm_h == pytest.approx(np.sqrt(space_2d.grid.inner(space_2d.solve_T(v), v)))
    assert norm_d <= space_2d.embedding_constant * norm_h * (1 + 1e-12)


def test_pairing_extends_inner_product(space_2d):
    rng = np.random.default_rng(6)
    u, w = rng.standard_normal((2, space_2d.size))
    assert space_2d.pairing(u, w) == pytest.approx(
        space_2d.grid.inner(space_2d.solve_T(u), w)
    )


def test_resolvent_solves_shifted_system(space_1d, vector):
    n = 50.0
    j = space_1d.resolvent_J(n, vector)
    assert_allclose(j + space_1d.apply_T(j) / n, vector, atol=1e-9)
    assert_allclose(space_1d.yosida_T(n, vector), n * (vector - j), atol=1e-7)
    assert space_1d.norm_H(j) <= space_1d.norm_H(vector) * (1 + 1e-12)
    with pytest.raises(ValueError):
        space_1d.resolvent_J(0.5, vector)


def test_approx_norm_monotone(space_1d, vector):
    values = [space_1d.approx_norm(n, vector) for n in (1, 10, 100, 1000, 1e6)]
    assert np.all(np.diff(values) >= -1e-12)
    assert values[-1] <= space_1d.norm_S(vector) * (1 + 1e-12)
    with pytest.raises(ValueError):
        space_1d.approx_norm(0, vector)


def test_project_p(space_1d, vector):
    p3 = space_1d.project_P(3, vector)
    assert_allclose(space_1d.coefficients(p3)[3:], 0.0, atol=1e-12)
    assert_allclose(space_1d.project_P(3, p3), p3, atol=1e-12)
    assert_allclose(space_1d.project_P(space_1d.n_modes, vector), vector, atol=1e-12)
    with pytest.raises(ValueError):
        space_1d.project_P(0, vector)
    with pytest.raises(ValueError):
        space_1d.project_P(space_1d.n_modes + 1, vector)
