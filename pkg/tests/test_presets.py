"""Tests for experiment presets and TOML configuration."""

import numpy as np
import pytest
import toml
from numpy.testing import assert_allclose

from sgflow.constants import BoundaryCondition, Form, NoiseKind, TripleMode, Variant
from sgflow.presets import (
    PRESETS,
    ConfigError,
    ExperimentPreset,
    build_all,
    build_coefficient,
    get_preset,
    initial_state,
    list_presets,
    load_config,
    noise_spec,
    sample_states,
    save_config,
)
from sgflow.spectral import GridDomain, SpectralSpace


@pytest.fixture
def preset():
    return get_preset("curveshort_1d")


def test_catalogue():
    names = list_presets()
    assert len(names) == 9
    assert "tvflow_1d" in names and "plasma_2d" in names
    assert get_preset("fastdiff_1d").operator.p == 1.5
    assert get_preset("fastdiff_1d_p1").operator.p == 1.0
    with pytest.raises(ConfigError):
        get_preset("nope")


def test_get_preset_returns_copies(preset):
    preset.solver.dt = 0.5
    assert PRESETS["curveshort_1d"].solver.dt == 1e-3


def test_variant_support():
    assert get_preset("fastdiff_1d", "poisson").variant == Variant.POISSON
    with pytest.raises(ConfigError) as info:
        get_preset("plasma_2d", Variant.MULTIPLICATIVE)
    assert "variant" in str(info.value)


def test_noise_spec_follows_variant(preset):
    assert noise_spec(preset).kind == NoiseKind.ZERO
    assert noise_spec(preset.with_variant("additive")).kind == NoiseKind.WIENER
    poisson = noise_spec(preset.with_variant("poisson"))
    assert poisson.kind == NoiseKind.POISSON
    assert poisson.jump_modes == (1, 2)


def test_overrides(preset):
    short = preset.with_overrides(horizon=0.01, dt=None)
    assert short.solver.horizon == 0.01
    assert short.solver.dt == preset.solver.dt
    with pytest.raises(ConfigError) as info:
        preset.with_overrides(dt=0.003)
    assert info.value.errors[0].startswith("solver.")


def test_build_all():
    space, op, x0 = build_all(get_preset("plasma_2d"))
    assert space.triple_mode == TripleMode.L2_OVER_HM1
    assert space.size == 48 * 48
    assert op.form == Form.DIFFUSION
    assert x0.shape == (space.size,)
    neumann, _, y0 = build_all(get_preset("neumann_plap_1d"))
    assert neumann.grid.bc == BoundaryCondition.NEUMANN_MEAN_ZERO
    assert y0.mean() == pytest.approx(0.0, abs=1e-12)
    fast, sign_op, _ = build_all(get_preset("fastdiff_1d_p1"))
    assert fast.triple_mode == TripleMode.L2_OVER_HM1
    assert sign_op.form == Form.DIFFUSION
    assert sign_op.graph.p == 1.0
    assert sign_op.graph.is_singular


def test_build_coefficient(preset):
    space, _, _ = build_all(preset)
    coeff = build_coefficient(preset, space)
    assert coeff.modes == space.n_modes
    assert coeff.beta(np.zeros(space.size)) == 1.0


def test_toml_round_trip(preset, tmp_path):
    path = tmp_path / "preset.toml"
    save_config(preset.with_variant("multiplicative"), str(path))
    loaded = load_config(str(path))
    assert loaded.to_dict() == preset.with_variant("multiplicative").to_dict()


def test_config_errors_are_collected(tmp_path):
    data = get_preset("tvflow_1d").to_dict()
    data["space"]["n"] = 1
    data["operator"]["p"] = 3.0
    data["noise"]["colour"] = "blue"
    data["solver"]["dt"] = "fast"
    path = tmp_path / "bad.toml"
    with open(path, "w") as f:
        toml.dump(data, f)
    with pytest.raises(ConfigError) as info:
        load_config(str(path))
    errors = info.value.errors
    assert "noise.colour: unknown key" in errors
    assert any(e.startswith("solver.dt") for e in errors)


def test_validation_messages():
    data = get_preset("tvflow_1d").to_dict()
    data["space"]["n"] = 1
    data["operator"]["p"] = 3.0
    data["diagnostics"]["initial"] = "noise"
    with pytest.raises(ConfigError) as info:
        ExperimentPreset.from_dict(data)
    joined = "\n".join(info.value.errors)
    assert "space.n" in joined
    assert "operator.p" in joined
    assert "diagnostics.initial" in joined


def test_rough_noise_is_rejected():
    data = get_preset("tvflow_1d", "additive").to_dict()
    data["noise"]["rho"] = 1.5
    with pytest.raises(ConfigError) as info:
        ExperimentPreset.from_dict(data)
    assert any(e.startswith("noise.rho") for e in info.value.errors)


def test_broken_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("name demo")
    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize("kind", ["sine", "random", "step"])
def test_initial_states(kind):
    space = SpectralSpace(GridDomain(2, 6))
    x = initial_state(space, kind, seed=3, amplitude=2.0)
    assert x.shape == (36,)
    assert np.max(np.abs(x)) <= 2.0


def test_initial_state_unknown():
    with pytest.raises(ValueError):
        initial_state(SpectralSpace(GridDomain(1, 6)), "gaussian")


def test_sample_states_radius():
    space = SpectralSpace(GridDomain(1, 12))
    states = sample_states(space, 25, seed=0, radius=0.5)
    norms = np.array([space.norm_H(x) for x in states])
    assert np.all(norms <= 0.5 + 1e-12)
    assert_allclose(sample_states(space, 25, seed=0, radius=0.5), states)
