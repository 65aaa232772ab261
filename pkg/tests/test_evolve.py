"""Tests for the time steppers and the limit-solution drivers."""

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sgflow.constants import Form, GraphKind, Modulation, NoiseKind, PicardCol, TrajCol
from sgflow.drift import DriftOperator
from sgflow.evolve import (
    LadderLevel,
    PicardStall,
    SolverConfig,
    Trajectory,
    limit_solution,
    read_states,
    refinement_gaps,
    s_bound_constant,
    semiflow_check,
    solve_additive,
    solve_multiplicative,
    zero_path,
)
from sgflow.graphs import ScalarGraph
from sgflow.noise import DiffusionCoefficient, NoisePath, NoiseSpec, sample_path
from sgflow.presets import initial_state
from sgflow.spectral import GridDomain, SpectralSpace


@pytest.fixture
def space():
    return SpectralSpace(GridDomain(1, 16))


@pytest.fixture
def op(space):
    """Curve-shortening drift, smooth and single valued."""
    return DriftOperator(space, ScalarGraph(GraphKind.ARCTAN), Form.DIVERGENCE)


@pytest.fixture
def x0(space):
    return initial_state(space, "sine")


@pytest.fixture
def cfg():
    return SolverConfig(dt=0.01, horizon=0.1)


@pytest.fixture
def wiener_path(space, cfg):
    spec = NoiseSpec(NoiseKind.WIENER, sigma=10.0, rho=2.0)
    return sample_path(space, spec, seed=21, dt=cfg.dt, n_steps=cfg.n_steps)


def test_solver_config_validation():
    cfg = SolverConfig(dt=0.01, horizon=0.5, m=4)
    assert cfg.n_steps == 50
    assert cfg.with_steps(10).horizon == pytest.approx(0.1)
    assert SolverConfig.from_dict(cfg.to_dict()) == cfg
    assert "picard_window" not in cfg.to_dict()
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0, horizon=1.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.3, horizon=1.0)
    with pytest.raises(ValueError) as info:
        SolverConfig(dt=0.1, horizon=1.0, eps=-1.0, m=0)
    assert "; " in str(info.value)


def test_zero_data_stays_zero(op, cfg):
    traj = solve_additive(op, np.zeros(op.space.size), zero_path(op, cfg.dt, cfg.n_steps), cfg)
    assert not np.any(traj.states)
    assert traj.n_steps == cfg.n_steps
    assert traj.dt == pytest.approx(cfg.dt)


def test_deterministic_flow_dissipates(op, x0, cfg):
    traj = solve_additive(op, x0, zero_path(op, cfg.dt, cfg.n_steps), cfg)
    norms = traj.norms_H
    energy = traj.diagnostics[TrajCol.ENERGY].to_numpy()
    assert np.all(np.diff(norms) <= 1e-9)
    assert np.all(np.diff(energy) <= 1e-9)
    assert list(traj.to_frame().columns) == TrajCol.cols
    assert traj.diagnostics[TrajCol.K].tolist() == list(range(cfg.n_steps + 1))


def test_selections_are_drift_values(op, x0, cfg, wiener_path):
    traj = solve_additive(op, x0, wiener_path, cfg)
    assert traj.selections.shape == (cfg.n_steps, op.space.size)
    for k in (0, cfg.n_steps - 1):
        gap = traj.selections[k] - op.apply_selection(traj.states[k + 1])
        assert op.space.norm_H(gap) <= 1e-6


def test_path_must_match_config(op, x0, cfg, space):
    spec = NoiseSpec(NoiseKind.WIENER, sigma=1.0, rho=2.0)
    with pytest.raises(ValueError):
        solve_additive(op, x0, sample_path(space, spec, 0, 0.02, cfg.n_steps), cfg)
    with pytest.raises(ValueError):
        solve_additive(op, x0, sample_path(space, spec, 0, cfg.dt, 3), cfg)


def test_extinction_step():
    norms = [1.0, 0.5, 0.0, 0.0, 0.0, 0.0]
    diag = pd.DataFrame({TrajCol.NORM_H: norms})
    traj = Trajectory(np.arange(6) * 0.1, np.zeros((6, 4)), diag)
    assert traj.extinction_step(threshold=1e-10, sustain=3) == 2
    diag = pd.DataFrame({TrajCol.NORM_H: [1.0, 0.0, 1.0, 0.0, 0.0]})
    traj = Trajectory(np.arange(5) * 0.1, np.zeros((5, 4)), diag)
    assert traj.extinction_step(sustain=3) is None


def test_trajectory_shape_checks():
    diag = pd.DataFrame({TrajCol.NORM_H: [0.0, 0.0]})
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.1, 0.2]), np.zeros((2, 3)), diag)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.1, 0.3]), np.zeros((3, 3)), diag)


def test_state_dump(op, x0, cfg, tmp_path):
    traj = solve_additive(op, x0, zero_path(op, cfg.dt, cfg.n_steps), cfg)
    out = tmp_path / "states.bin"
    traj.write_states(str(out))
    assert out.read_bytes()[:4] == b"SGFL"
    dim, n, states = read_states(str(out))
    assert (dim, n) == (1, 16)
    assert_array_equal(states, traj.states)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + out.read_bytes()[4:])
    with pytest.raises(ValueError):
        read_states(str(bad))


def test_semiflow_restart(op, x0, cfg, wiener_path):
    assert semiflow_check(op, x0, 0.0, 0.0, cfg) == 0.0
    assert semiflow_check(op, x0, 0.05, 0.05, cfg) <= 1e-9
    assert semiflow_check(op, x0, 0.03, 0.07, cfg, wiener_path) <= 1e-9
    with pytest.raises(ValueError):
        semiflow_check(op, x0, 0.015, 0.05, cfg)


def test_constant_coefficient_matches_additive(op, x0, cfg, space):
    coeff = DiffusionCoefficient(space, 10.0, 2.0)
    mult = solve_multiplicative(op, x0, coeff, 33, cfg)
    path = sample_path(space, NoiseSpec(NoiseKind.WIENER, sigma=10.0, rho=2.0), 33, cfg.dt, cfg.n_steps)
    add = solve_additive(op, x0, path, cfg)
    assert_array_equal(mult.states, add.states)
    log = mult.picard_log
    assert list(log.columns) == PicardCol.cols
    assert np.isnan(log[PicardCol.RATIO].iloc[0])


def test_saturating_picard_converges(op, x0, cfg, space):
    coeff = DiffusionCoefficient(space, 10.0, 2.0, modulation=Modulation.SATURATING)
    traj = solve_multiplicative(op, x0, coeff, 5, cfg)
    log = traj.picard_log
    assert traj.n_steps == cfg.n_steps
    assert log[PicardCol.SWEEP].max() <= cfg.picard_max_sweeps
    last = log.groupby(PicardCol.WINDOW)[PicardCol.GAP].last()
    assert np.all(last < cfg.picard_tol)


def test_picard_stall(op, x0, space):
    coeff = DiffusionCoefficient(space, 10.0, 2.0, modulation=Modulation.SATURATING)
    cfg = SolverConfig(dt=0.01, horizon=0.05, picard_max_sweeps=1)
    with pytest.raises(PicardStall) as info:
        solve_multiplicative(op, x0, coeff, 5, cfg)
    assert info.value.window == 0
    assert info.value.sweeps == 1


def test_viscous_ladder(op, x0, cfg):
    ladder = [LadderLevel(eps=1e-2), LadderLevel(eps=1e-3), LadderLevel(eps=1e-4)]
    limit = limit_solution(op, x0, cfg, ladder)
    assert len(limit.gaps) == 2
    assert len(limit.trajectories) == 3
    assert limit.gaps[1] < limit.gaps[0]
    with pytest.raises(ValueError):
        limit_solution(op, x0, cfg, [LadderLevel(eps=1e-3), LadderLevel(eps=1e-2)])
    with pytest.raises(ValueError):
        limit_solution(op, x0, cfg, [LadderLevel(eps=1e-3)])
    with pytest.raises(ValueError) as info:
        limit_solution(op, x0, cfg, [LadderLevel(eps=1e-3), LadderLevel(eps=1e-3)])
    assert "strictly" in str(info.value)
    with pytest.raises(ValueError):
        limit_solution(op, x0, cfg, [LadderLevel(1e-3, smoothing=100.0), LadderLevel(1e-4, smoothing=10.0)])


def test_refinement_and_s_bound(op, x0, cfg, wiener_path):
    gaps = refinement_gaps(op, x0, wiener_path.coarsen(1), cfg, halvings=1)
    assert len(gaps) == 1
    assert np.isfinite(gaps[0])
    traj = solve_additive(op, x0, wiener_path, cfg)
    assert s_bound_constant(op, traj, wiener_path) >= 0.0
    assert_allclose(traj.states[0], x0)


def test_s_bound_without_finite_constant(op):
    diag = pd.DataFrame({TrajCol.NORM_H: [0.0, 1.0, 1.0], TrajCol.NORM_S: [0.0, 1.0, 2.0]})
    traj = Trajectory(np.arange(3) * 0.1, np.zeros((3, op.space.size)), diag)
    with pytest.raises(ValueError) as info:
        s_bound_constant(op, traj, zero_path(op, 0.1, 2))
    assert "No S-bound constant" in str(info.value)
    diag[TrajCol.NORM_S] = [1.0, 1.0, 0.5]
    traj = Trajectory(np.arange(3) * 0.1, np.zeros((3, op.space.size)), diag)
    assert s_bound_constant(op, traj, zero_path(op, 0.1, 2)) == 0.0


def test_multiplicative_replay_from_csv(op, x0, cfg, space, tmp_path):
    spec = NoiseSpec(NoiseKind.WIENER, sigma=10.0, rho=2.0)
    drawn = sample_path(space, spec, 33, cfg.dt, cfg.n_steps)
    out = tmp_path / "noise.csv"
    drawn.write_csv(str(out))
    replay = NoisePath.read_csv(str(out), space, spec)
    assert_allclose(replay.standard, drawn.standard, rtol=1e-12)
    coeff = DiffusionCoefficient(space, 10.0, 2.0)
    direct = solve_multiplicative(op, x0, coeff, 33, cfg)
    replayed = solve_multiplicative(op, x0, coeff, 0, cfg, path=replay)
    assert_allclose(replayed.states, direct.states, atol=1e-7)
    bare = NoisePath.read_csv(str(out), space)
    assert bare.standard is None
    with pytest.raises(ValueError) as info:
        solve_multiplicative(op, x0, coeff, 0, cfg, path=bare)
    assert "standard increments" in str(info.value)
