"""Tests for the property-suite runner."""

import numpy as np
import pytest

from sgflow.constants import Scale, VerifyCol
from sgflow.spectral import GridDomain, SpectralSpace
from sgflow.verify import SUITES, CheckResult, SuiteContext, _total_variation, run_suites


def test_registered_suites():
    assert set(SUITES) == {
        "resolvent",
        "contraction",
        "ladder",
        "extinction",
        "plasma",
        "brezis",
        "picard",
        "ergodic",
        "determinism",
        "eproperty",
        "svi",
        "evolve",
        "audit",
    }


def test_context_pick():
    assert SuiteContext().pick(5, 200) == 5
    assert SuiteContext(Scale.FULL).pick(5, 200) == 200


def test_resolvent_suite_passes():
    table = run_suites(["resolvent"], master_seed=3)
    assert list(table.columns) == VerifyCol.cols
    assert set(table[VerifyCol.SUITE]) == {"resolvent"}
    assert len(table) == 9
    assert table[VerifyCol.PASSED].all()
    assert "soft_threshold_exact" in set(table[VerifyCol.CHECK])


def test_unknown_suite():
    with pytest.raises(ValueError) as info:
        run_suites(["resolvent", "nope"])
    assert "nope" in str(info.value)


def test_check_result_fields():
    row = CheckResult("demo", "gap", 0.5, 1.0, True)
    assert (row.suite, row.check, row.passed) == ("demo", "gap", True)


def test_brezis_suite_uses_euclidean_total_variation():
    table = run_suites(["brezis"])
    checks = set(table[VerifyCol.CHECK])
    assert {"total_variation_1d", "total_variation_2d"} <= checks
    assert table[VerifyCol.PASSED].all()


def test_total_variation_is_isotropic():
    space = SpectralSpace(GridDomain(2, 6))
    coords = space.grid.coordinates()
    diagonal = coords[:, 0] + coords[:, 1]
    grad = (space.gradient @ diagonal).reshape(2, -1)
    expected = space.grid.cell_weight * np.sum(np.hypot(grad[0], grad[1]))
    assert _total_variation(space, diagonal) == pytest.approx(expected)
    anisotropic = space.grid.cell_weight * np.sum(np.abs(grad))
    assert _total_variation(space, diagonal) < anisotropic
