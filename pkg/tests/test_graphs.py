"""Tests for the scalar and radial monotone graphs."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgflow.constants import GraphKind
from sgflow.graphs import (
    ScalarGraph,
    VectorGraph,
    delta2_check,
    delta2_violation,
    theta,
    theta_conjugate,
)

GRAPHS = [
    ScalarGraph(GraphKind.POWER, p=1.0, delta=1e-3),
    ScalarGraph(GraphKind.POWER, p=1.5),
    ScalarGraph(GraphKind.POWER, p=1.5, delta=1e-2),
    ScalarGraph(GraphKind.LOG_PLASMA),
    ScalarGraph(GraphKind.ARCTAN),
    ScalarGraph(GraphKind.MINIMAL_SURFACE),
    ScalarGraph(GraphKind.PLASTIC_SHEAR),
]


@pytest.fixture
def rhs():
    return np.linspace(-5.0, 5.0, 41)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        ScalarGraph(GraphKind.POWER, p=2.5)
    with pytest.raises(ValueError):
        ScalarGraph(GraphKind.POWER, p=1.0, delta=-1.0)
    with pytest.raises(ValueError):
        ScalarGraph(GraphKind.ARCTAN).scalar_resolvent(-1.0, 1.0)


def test_soft_threshold():
    graph = ScalarGraph(GraphKind.POWER, p=1.0)
    out = graph.scalar_resolvent(0.5, np.array([-2.0, 0.3, 1.0]))
    assert_allclose(out, [-1.5, 0.0, 0.5])
    assert graph.scalar_resolvent(0.5, 1.0) == pytest.approx(0.5)


def test_linear_resolvent(rhs):
    graph = ScalarGraph(GraphKind.POWER, p=2.0)
    assert_allclose(graph.scalar_resolvent(3.0, rhs), rhs / 4.0)
    assert_allclose(graph.scalar_resolvent(0.0, rhs), rhs)


@pytest.mark.parametrize("graph", GRAPHS, ids=repr)
@pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
def test_resolvent_root(graph, lam, rhs):
    r = np.asarray(graph.scalar_resolvent(lam, rhs))
    residual = np.abs(r + lam * np.asarray(graph.branch(r)) - rhs)
    slope = 1.0 + lam * np.abs(np.asarray(graph.derivative(r)))
    assert np.all(residual <= 2e-12 * slope + 1e-12)
    # odd, monotone, nonexpansive
    assert_allclose(graph.scalar_resolvent(lam, -rhs), -r, atol=1e-10)
    assert np.all(np.diff(r) >= -1e-10)
    assert np.all(np.abs(np.diff(r)) <= np.abs(np.diff(rhs)) + 1e-10)


@pytest.mark.parametrize("graph", GRAPHS, ids=repr)
def test_potential_convex_and_even(graph):
    r = np.linspace(-4.0, 4.0, 81)
    assert graph.convexity_defect(r) >= -1e-12
    assert_allclose(graph.potential(r), graph.potential(-r))
    assert graph.potential(0.0) == pytest.approx(0.0)
    assert graph.branch(0.0) == 0.0


def test_branch_matches_potential_slope():
    graph = ScalarGraph(GraphKind.LOG_PLASMA)
    r = np.linspace(0.5, 3.0, 6)
    eps = 1e-6
    slope = (graph.potential(r + eps) - graph.potential(r - eps)) / (2 * eps)
    assert_allclose(slope, graph.branch(r), rtol=1e-6)


def test_singular_derivative_and_lipschitz():
    graph = ScalarGraph(GraphKind.POWER, p=1.5)
    assert graph.is_singular
    assert math.isinf(graph.derivative(0.0))
    assert math.isinf(graph.lipschitz_constant())
    assert graph.lipschitz_constant(1e-2) == pytest.approx(1e-2**-0.5)
    assert ScalarGraph(GraphKind.ARCTAN).lipschitz_constant() == 1.0
    assert not ScalarGraph(GraphKind.MINIMAL_SURFACE, delta=0.1).is_singular
    assert graph.with_delta(0.1).delta == 0.1
    assert graph.with_delta(0.1) == ScalarGraph(GraphKind.POWER, p=1.5, delta=0.1)


def test_vector_graph_radial():
    vg = VectorGraph(ScalarGraph(GraphKind.POWER, p=1.0), 2)
    x = np.array([[3.0, 0.0, 0.0], [4.0, 0.0, -2.0]])
    assert_allclose(vg.magnitude(x), [5.0, 0.0, 2.0])
    assert_allclose(vg.value(x), [[0.6, 0.0, 0.0], [0.8, 0.0, -1.0]])
    res = vg.resolvent(1.0, x)
    assert_allclose(res, [[2.4, 0.0, 0.0], [3.2, 0.0, -1.0]])
    with pytest.raises(ValueError):
        vg.value(np.zeros((3, 2)))


def test_theta_conjugate_young():
    r = np.array([0.0, 0.5, 1.0, 2.0, 4.0])
    conj = np.asarray(theta_conjugate(r))
    assert conj[0] == 0.0
    assert np.all(conj <= np.exp(r))
    # Young's inequality rs <= θ(s) + θ*(r)
    for s in (0.1, 1.0, 3.0):
        assert np.all(r * s <= theta(s) + conj + 1e-10)


def test_delta2():
    r = np.logspace(-3, 3, 50)
    assert delta2_check(r)
    assert delta2_violation(r) is None
