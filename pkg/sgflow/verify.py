"""Property suites checking the solvers against their quantitative guarantees."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from sgflow.constants import (
    FORM_TRIPLE,
    NEWTON_TOL,
    BoundaryCondition,
    Form,
    GraphKind,
    Modulation,
    NoiseKind,
    Scale,
    TrajCol,
    Variant,
    VerifyCol,
)
from sgflow.drift import DriftOperator
from sgflow.ergodics import (
    ErgodicComparison,
    decay_rate_fit,
    default_functionals,
    eproperty_check,
    extinction_time,
    fit_power_law,
    lipschitz_ratio,
    occupation_average,
    pilot_ball,
    plasma_decay_bound,
    stochastic_stability,
    svi_check,
)
from sgflow.evolve import (
    LadderLevel,
    SolverConfig,
    ladder_independence,
    limit_solution,
    refinement_gaps,
    s_bound_constant,
    semiflow_check,
    simulate_states,
    solve_additive,
    solve_multiplicative,
    zero_path,
)
from sgflow.graphs import ScalarGraph, delta2_check
from sgflow.noise import DiffusionCoefficient, NoiseSpec, sample_path
from sgflow.presets import (
    ExperimentPreset,
    build_all,
    build_coefficient,
    get_preset,
    initial_state,
    list_presets,
    noise_spec,
    sample_states,
)
from sgflow.spectral import GridDomain, SpectralSpace
from sgflow.utils import path_seed, timed

logger = logging.getLogger("Verify")

# graph kinds and exponents covered by the resolvent oracle
_ORACLE_GRAPHS = (
    (GraphKind.POWER, 1.0, 0.0),
    (GraphKind.POWER, 1.0, 1e-3),
    (GraphKind.POWER, 1.5, 0.0),
    (GraphKind.POWER, 2.0, 0.0),
    (GraphKind.LOG_PLASMA, 2.0, 0.0),
    (GraphKind.ARCTAN, 2.0, 0.0),
    (GraphKind.MINIMAL_SURFACE, 2.0, 0.0),
    (GraphKind.PLASTIC_SHEAR, 2.0, 0.0),
)
_LAMBDAS = (0.0, 1e-3, 1.0, 1e3)


@dataclass
class CheckResult:
    """One measured quantity and its acceptance threshold."""

    suite: str
    check: str
    value: float
    threshold: float
    passed: bool


@dataclass
class SuiteContext:
    """Scale, seed and worker count shared by every suite."""

    scale: Scale = Scale.QUICK
    master_seed: int = 0
    workers: int = 1

    def pick(self, quick: float, full: float) -> float:
        """The quick or the full value of a size parameter."""
        return full if self.scale == Scale.FULL else quick


SuiteFunc = Callable[[SuiteContext], List[CheckResult]]
SUITES: Dict[str, SuiteFunc] = {}


def _suite(name: str) -> Callable[[SuiteFunc], SuiteFunc]:
    def register(func: SuiteFunc) -> SuiteFunc:
        SUITES[name] = timed(f"verify.{name}")(func)
        return func

    return register


def _at_most(suite: str, check: str, value: float, threshold: float) -> CheckResult:
    return CheckResult(suite, check, float(value), float(threshold), bool(value <= threshold))


def _at_least(suite: str, check: str, value: float, threshold: float) -> CheckResult:
    return CheckResult(suite, check, float(value), float(threshold), bool(value >= threshold))


def _sized(
    name: str,
    variant: Union[Variant, str],
    n: Optional[int] = None,
    dt: Optional[float] = None,
    horizon: Optional[float] = None,
) -> ExperimentPreset:
    preset = get_preset(name, variant)
    if n is not None:
        preset = replace(preset, space=replace(preset.space, n=int(n)))
    return preset.with_overrides(dt=dt, horizon=horizon)


def _unit(space: SpectralSpace, v: np.ndarray) -> np.ndarray:
    return v / space.norm_H(v)


def _oracle(graph: ScalarGraph, lam: float, f: np.ndarray, delta: float) -> np.ndarray:
    """Resolvent by root bracketing, independent of the numba kernel."""
    if lam == 0:
        return f.copy()
    if graph.kind == GraphKind.POWER and graph.p == 1.0 and delta == 0:
        return np.sign(f) * np.maximum(np.abs(f) - lam, 0.0)
    out = np.zeros_like(f)
    for i, v in enumerate(f):
        if v == 0:
            continue
        out[i] = brentq(
            lambda r: r + lam * float(graph.branch(r, delta)) - v,
            min(0.0, v),
            max(0.0, v),
            xtol=1e-14,
            rtol=4 * np.finfo(float).eps,
        )
    return out


@_suite("resolvent")
def resolvent_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Pointwise resolvent against the bracketing oracle and the soft threshold."""
    f = np.linspace(-5.0, 5.0, int(ctx.pick(200, 1000)))
    rows = []
    for kind, p, delta in _ORACLE_GRAPHS:
        graph = ScalarGraph(kind, p)
        err = 0.0
        for lam in _LAMBDAS:
            got = np.asarray(graph.scalar_resolvent(lam, f, delta))
            err = max(err, float(np.max(np.abs(got - _oracle(graph, lam, f, delta)))))
        rows.append(_at_most("resolvent", f"{kind.value}(p={p:g},delta={delta:g})", err, 1e-10))
    tv = ScalarGraph(GraphKind.POWER, 1.0)
    exact = all(
        np.array_equal(
            np.asarray(tv.scalar_resolvent(lam, f)),
            np.sign(f) * np.maximum(np.abs(f) - lam, 0.0),
        )
        for lam in _LAMBDAS[1:]
    )
    rows.append(CheckResult("resolvent", "soft_threshold_exact", float(exact), 1.0, exact))
    return rows


@_suite("contraction")
def contraction_suite(ctx: SuiteContext) -> List[CheckResult]:
    """sup_k ‖X'_k - X''_k‖_H / ‖x' - x''‖_H under common additive noise."""
    n_pairs = int(ctx.pick(5, 200))
    rows = []
    for name in ("tvflow_1d", "fastdiff_1d"):
        preset = _sized(
            name,
            Variant.ADDITIVE,
            n=int(ctx.pick(32, 128)),
            horizon=ctx.pick(0.02, 0.1),
        )
        space, op, _ = build_all(preset)
        cfg = preset.solver
        spec = noise_spec(preset)
        starts = sample_states(space, 2 * n_pairs, ctx.master_seed)
        worst = 0.0
        for i in range(n_pairs):
            path = sample_path(space, spec, path_seed(ctx.master_seed, i), cfg.dt, cfg.n_steps)
            a = simulate_states(op, starts[2 * i], path, cfg)[0]
            b = simulate_states(op, starts[2 * i + 1], path, cfg)[0]
            coef = space.coefficient_rows(a - b)
            dist = np.sqrt((coef * coef) @ space.h_weights)
            worst = max(worst, float(dist.max() / dist[0]))
        rows.append(_at_most("contraction", name, worst, 1.0 + 10 * NEWTON_TOL))
    return rows


@_suite("ladder")
def ladder_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Cauchy gaps of the viscosity ladder on smooth total variation data."""
    preset = _sized(
        "tvflow_1d",
        Variant.DETERMINISTIC,
        n=int(ctx.pick(32, 256)),
        horizon=ctx.pick(0.02, 0.05),
    )
    space, op, x0 = build_all(preset)
    cfg = preset.solver
    delta = 1e-6
    ladder = [LadderLevel(eps, delta) for eps in (1e-4, 1e-5, 1e-6, 1e-7)]
    limit = limit_solution(op, x0, cfg, ladder)
    gaps = limit.gaps
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    scale = space.norm_H(x0)
    other = [LadderLevel(eps, delta) for eps in (1e-3, 1e-5, 1e-8)]
    independence = ladder_independence(op, x0, cfg, ladder, other)
    return [
        CheckResult("ladder", "gaps_decreasing", float(monotone), 1.0, monotone),
        _at_most("ladder", "finest_gap", gaps[-1], 1e-4 * scale),
        _at_most("ladder", "two_ladders", independence, 1e-4 * scale),
    ]


@_suite("extinction")
def extinction_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Finite extinction of fast diffusion within the coercivity bound."""
    preset = _sized("fastdiff_1d", Variant.DETERMINISTIC, n=int(ctx.pick(64, 128)))
    space, op, x0 = build_all(preset)
    cfg = preset.solver
    alpha = preset.diagnostics.alpha or preset.operator.p
    traj = solve_additive(op, x0, zero_path(op, cfg.dt, cfg.n_steps), cfg)
    report = extinction_time(op, traj, alpha=alpha)
    control_op = DriftOperator(space, ScalarGraph(GraphKind.POWER, 2.0), op.form)
    control = solve_additive(control_op, x0, zero_path(op, cfg.dt, cfg.n_steps), cfg)
    alive = control.extinction_step(1e-10, 3) is None
    return [
        CheckResult(
            "extinction",
            "finite_within_bound",
            report.time,
            1.05 * report.bound,
            bool(math.isfinite(report.time) and report.holds),
        ),
        CheckResult("extinction", "linear_control_survives", float(alive), 1.0, alive),
    ]


@_suite("plasma")
def plasma_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Decay exponent, Lyapunov monotonicity and a-priori bounds of the plasma flow."""
    preset = _sized(
        "plasma_2d",
        Variant.DETERMINISTIC,
        n=int(ctx.pick(16, 48)),
        dt=ctx.pick(0.1, 0.05),
    )
    space, op, _ = build_all(preset)
    cfg = preset.solver
    window = preset.diagnostics.decay_window
    rows = []
    for i in range(int(ctx.pick(2, 5))):
        x0 = initial_state(space, "random", seed=ctx.master_seed + i, amplitude=1000.0)
        traj = solve_additive(op, x0, zero_path(op, cfg.dt, cfg.n_steps), cfg)
        floor = 100 * NEWTON_TOL * max(1.0, space.norm_H(x0))
        rows.append(_at_most("plasma", f"decay_slope_{i}", decay_rate_fit(traj, window, floor), -0.4))
        thetas = traj.diagnostics[TrajCol.THETA].to_numpy()
        rise = float(np.max(np.diff(thetas)))
        rows.append(
            _at_most("plasma", f"theta_nonincreasing_{i}", rise, 10 * NEWTON_TOL * max(1.0, thetas[0]))
        )
        _, holds = plasma_decay_bound(op, traj)
        rows.append(CheckResult("plasma", f"theta_bound_{i}", float(holds), 1.0, holds))
    times = np.linspace(window[0], window[1], 50)
    slope = fit_power_law(times, 3.0 / np.sqrt(times), window)
    rows.append(_at_most("plasma", "synthetic_slope_error", abs(slope + 0.5), 1e-6))
    r = np.random.default_rng(ctx.master_seed).lognormal(0.0, 3.0, int(ctx.pick(1000, 10000)))
    ok = delta2_check(r)
    rows.append(CheckResult("plasma", "delta2", float(ok), 1.0, ok))
    return rows


def _total_variation(space: SpectralSpace, u: np.ndarray) -> float:
    """Discrete total variation h^dim Σ_cells |∇_h u|, Euclidean length per cell."""
    grad = (space.gradient @ u).reshape(space.grid.dim, -1)
    return float(space.grid.cell_weight * np.sum(np.sqrt((grad * grad).sum(axis=0))))


@_suite("brezis")
def brezis_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Energies do not increase under the resolvent J_n of the Laplacian."""
    rng = np.random.default_rng(ctx.master_seed)
    n_samples = int(ctx.pick(20, 100))
    rows = []
    for dim, n in ((1, int(ctx.pick(32, 64))), (2, int(ctx.pick(12, 24)))):
        space = _space(dim, n, Form.DIVERGENCE)
        worst = -math.inf
        for _ in range(n_samples):
            u = rng.standard_normal(space.size)
            base = _total_variation(space, u)
            for idx in (1, 10, 100):
                excess = _total_variation(space, space.resolvent_J(idx, u)) - base
                worst = max(worst, excess if dim == 1 else excess / base)
        rows.append(_at_most("brezis", f"total_variation_{dim}d", worst, 1e-10 if dim == 1 else 1e-6))
    space = _space(1, int(ctx.pick(32, 64)), Form.DIVERGENCE)
    for kind in (GraphKind.ARCTAN, GraphKind.MINIMAL_SURFACE, GraphKind.PLASTIC_SHEAR):
        op = DriftOperator(space, ScalarGraph(kind), Form.DIVERGENCE)
        rows.append(_at_most("brezis", f"orlicz_{kind.value}", _orlicz_excess(op, rng, n_samples), 1e-8))
    plasma = DriftOperator(
        _space(1, int(ctx.pick(32, 64)), Form.DIFFUSION),
        ScalarGraph(GraphKind.LOG_PLASMA),
        Form.DIFFUSION,
    )
    rows.append(_at_most("brezis", "orlicz_LogPlasma", _orlicz_excess(plasma, rng, n_samples), 1e-8))
    return rows


def _space(dim: int, n: int, form: Form) -> SpectralSpace:
    return SpectralSpace(GridDomain(dim, n, BoundaryCondition.DIRICHLET), FORM_TRIPLE[form])


def _orlicz_excess(op: DriftOperator, rng: np.random.Generator, n_samples: int) -> float:
    space = op.space
    worst = -math.inf
    for _ in range(n_samples):
        u = rng.standard_normal(space.size)
        base = op.energy_phi(u)
        for idx in (1, 10, 100):
            worst = max(worst, op.energy_phi(space.resolvent_J(idx, u)) - base)
    return worst


@_suite("picard")
def picard_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Contraction of the frozen-noise iteration and its additive special case."""
    preset = _sized(
        "curveshort_1d",
        Variant.MULTIPLICATIVE,
        n=int(ctx.pick(32, 128)),
        horizon=ctx.pick(0.02, 0.1),
    )
    space, op, x0 = build_all(preset)
    cfg = preset.solver
    seed = path_seed(ctx.master_seed, 0)
    traj = solve_multiplicative(op, x0, build_coefficient(preset, space), seed, cfg)
    ratios = traj.picard_log["ratio"].dropna().to_numpy()
    worst = float(ratios.max()) if len(ratios) else 0.0
    sweeps = int(traj.picard_log.groupby("window")["sweep"].max().max())
    nz = preset.noise
    constant = DiffusionCoefficient(space, nz.sigma, nz.rho, modulation=Modulation.CONSTANT)
    mult = solve_multiplicative(op, x0, constant, seed, cfg)
    path = sample_path(
        space, NoiseSpec(NoiseKind.WIENER, nz.sigma, nz.rho), seed, cfg.dt, cfg.n_steps
    )
    add = solve_additive(op, x0, path, cfg)
    same = bool(np.array_equal(mult.states, add.states))
    return [
        CheckResult("picard", "sweep_ratio", worst, 1.0, worst < 1.0),
        _at_most("picard", "sweeps_per_window", sweeps, cfg.picard_max_sweeps),
        CheckResult("picard", "constant_beta_matches_additive", float(same), 1.0, same),
    ]


def _ergodic_setup(
    ctx: SuiteContext, horizon: float
) -> Tuple[DriftOperator, NoiseSpec, np.ndarray, SolverConfig]:
    preset = _sized(
        "tvflow_1d",
        Variant.ADDITIVE,
        n=int(ctx.pick(32, 64)),
        dt=ctx.pick(0.05, 0.01),
        horizon=horizon,
    )
    space, op, x0 = build_all(preset)
    if ctx.scale == Scale.QUICK:
        op = op.with_delta(1e-4)
    return op, noise_spec(preset), 0.5 * _unit(space, x0), preset.solver


@_suite("ergodic")
def ergodic_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Occupation averages from two starts forget the start."""
    n_paths = int(ctx.pick(8, 64))
    short, long = ctx.pick(2.0, 20.0), ctx.pick(10.0, 200.0)
    comparisons = []
    for horizon in (short, long):
        op, spec, x, cfg = _ergodic_setup(ctx, horizon)
        functionals = default_functionals(op.space)
        est = [
            occupation_average(
                op, spec, start, functionals, cfg, n_paths, ctx.master_seed, ctx.workers,
                show_progress=False,
            )
            for start in (x, -x)
        ]
        comparisons.append(ErgodicComparison(*est))
    early, late = comparisons
    rows = [
        _at_most("ergodic", f"gap_{name}", gap, 3 * se)
        for name, gap, se in zip(late.x.functional_ids, late.gaps, late.combined_se)
    ]
    shrinking = int(np.sum((late.gaps < early.gaps) | (late.gaps == 0)))
    rows.append(_at_least("ergodic", "gaps_shrinking", shrinking, 6))
    return rows


@_suite("determinism")
def determinism_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Worker count and repetition do not change any output."""
    op, spec, x, cfg = _ergodic_setup(ctx, ctx.pick(1.0, 5.0))
    functionals = default_functionals(op.space)
    n_paths = int(ctx.pick(4, 16))
    results = [
        occupation_average(
            op, spec, x, functionals, cfg, n_paths, ctx.master_seed, workers, show_progress=False
        ).path_means
        for workers in (1, max(2, ctx.workers))
    ]
    same_workers = bool(np.array_equal(results[0], results[1]))
    path = sample_path(op.space, spec, path_seed(ctx.master_seed, 0), cfg.dt, cfg.n_steps)
    first = solve_additive(op, x, path, cfg).to_frame()
    second = solve_additive(op, x, path, cfg).to_frame()
    same_runs = bool(first.to_csv(index=False) == second.to_csv(index=False))
    return [
        CheckResult("determinism", "workers", float(same_workers), 1.0, same_workers),
        CheckResult("determinism", "repeat_run", float(same_runs), 1.0, same_runs),
    ]


@_suite("eproperty")
def eproperty_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Equicontinuity on two functionals and stochastic stability."""
    op, spec, x, cfg = _ergodic_setup(ctx, 1.0)
    cfg = replace(cfg, dt=ctx.pick(0.01, 0.005))
    space = op.space
    y = x + 0.1 * _unit(space, space.eigenvectors[:, 1])
    n_paths = int(ctx.pick(8, 64))
    rows = []
    for functional in default_functionals(space)[:2]:
        for t in (0.1, 1.0, 5.0):
            res = eproperty_check(
                op, spec, functional, x, y, t, cfg, n_paths, ctx.master_seed, ctx.workers
            )
            rows.append(
                CheckResult(
                    "eproperty",
                    f"{functional.name}_t{t:g}",
                    res.lhs,
                    res.bound + 3 * res.stderr,
                    res.holds,
                )
            )
    eps_ball = pilot_ball(op, spec, x, cfg, int(ctx.pick(8, 16)), ctx.master_seed, ctx.workers)
    stab = stochastic_stability(op, spec, x, cfg, eps_ball, n_paths, ctx.master_seed, ctx.workers)
    rows.append(
        CheckResult("eproperty", "stability_fraction", stab.fraction, 0.0, stab.fraction > 0)
    )
    return rows


@_suite("svi")
def svi_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Variational inequality margins at three checkpoints."""
    preset = _sized(
        "tvflow_1d",
        Variant.ADDITIVE,
        n=int(ctx.pick(32, 128)),
        horizon=ctx.pick(0.02, 0.1),
    )
    space, op, x0 = build_all(preset)
    if ctx.scale == Scale.QUICK:
        op = op.with_delta(1e-4)
    table = svi_check(
        op,
        noise_spec(preset),
        x0,
        0.5 * x0,
        preset.solver,
        int(ctx.pick(8, 64)),
        ctx.master_seed,
        workers=ctx.workers,
    )
    return [
        CheckResult(
            "svi",
            f"margin_t{row.t:g}",
            row.margin,
            -(3 * row.stderr + row.slack),
            bool(row.holds),
        )
        for row in table.itertuples()
    ]


@_suite("evolve")
def evolve_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Semiflow restarts, time refinement and the S-bound constant."""
    rows = []
    preset = _sized(
        "fastdiff_1d", Variant.ADDITIVE, n=int(ctx.pick(32, 128)), dt=0.01, horizon=1.0
    )
    space, op, x0 = build_all(preset)
    cfg = preset.solver
    rows.append(_at_most("evolve", "semiflow_deterministic", semiflow_check(op, x0, 0.1, 0.1, cfg), 1e-9))
    path = sample_path(space, noise_spec(preset), path_seed(ctx.master_seed, 0), cfg.dt, 20)
    rows.append(_at_most("evolve", "semiflow_additive", semiflow_check(op, x0, 0.1, 0.1, cfg, path), 1e-9))

    fine = _sized(
        "curveshort_1d",
        Variant.ADDITIVE,
        n=int(ctx.pick(32, 128)),
        dt=2.5e-4,
        horizon=ctx.pick(0.02, 0.1),
    )
    space, op, x0 = build_all(fine)
    cfg = fine.solver
    path = sample_path(space, noise_spec(fine), path_seed(ctx.master_seed, 1), cfg.dt, cfg.n_steps)
    gaps = refinement_gaps(op, x0, path, cfg)
    shrinking = all(b < a for a, b in zip(gaps, gaps[1:]))
    rows.append(CheckResult("evolve", "refinement_gaps_decreasing", float(shrinking), 1.0, shrinking))
    constants = []
    for factor in (2, 1):
        level = path.coarsen(factor)
        level_cfg = replace(cfg, dt=level.dt, horizon=level.horizon)
        constants.append(s_bound_constant(op, solve_additive(op, x0, level, level_cfg), level))
    drift = abs(constants[0] - constants[1])
    rows.append(_at_most("evolve", "s_bound_stable", drift, 0.5 * max(constants) + 1e-12))
    return rows


@_suite("audit")
def audit_suite(ctx: SuiteContext) -> List[CheckResult]:
    """Structural hypotheses of every one-dimensional preset and the plasma preset."""
    rows = []
    n_samples = int(ctx.pick(20, 200))
    for name in list_presets():
        if name == "tvflow_2d":
            continue
        preset = get_preset(name)
        dim = preset.space.dim
        n = ctx.pick(24, 64) if dim == 1 else ctx.pick(8, 16)
        preset = replace(preset, space=replace(preset.space, n=int(n)))
        space, op, _ = build_all(preset)
        samples = sample_states(space, n_samples, ctx.master_seed, radius=2.0)
        report = op.hypothesis_audit(samples, c=1.0, C=2.0)
        rows.append(CheckResult("audit", f"{name}_drift", report.dual_surplus, 0.0, report.ok))
        noise_ok = all(build_coefficient(preset, space).verify_hypotheses(samples).values())
        rows.append(CheckResult("audit", f"{name}_noise", float(noise_ok), 1.0, noise_ok))
    space = _space(1, 32, Form.DIVERGENCE)
    xs = sample_states(space, int(ctx.pick(1000, 10000)), ctx.master_seed, radius=2.0)
    ys = sample_states(space, len(xs), ctx.master_seed + 1, radius=2.0)
    for functional in default_functionals(space):
        ratio = lipschitz_ratio(space, functional, xs, ys)
        rows.append(
            _at_most("audit", f"lipschitz_{functional.name}", ratio, functional.lipschitz * (1 + 1e-12))
        )
    return rows


def run_suites(
    names: Optional[Sequence[str]] = None,
    scale: Union[Scale, str] = Scale.QUICK,
    master_seed: int = 0,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Run property suites and collect every check.

    Parameters
    ----------
    names : Optional[Sequence[str]], optional
        Suites to run, by default all of :data:`SUITES`.
    scale : Scale, optional
        ``quick`` for desk-sized problems, ``full`` for the reference sizes.
    master_seed : int, optional
        Master seed of all Monte Carlo suites, by default 0.
    workers : int, optional
        Worker processes of the Monte Carlo suites, by default 1.

    Returns
    -------
    pd.DataFrame
        One row per check with suite, check, value, threshold and verdict.

    Raises
    ------
    ValueError
        If a suite name is unknown.
    """
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suites {unknown}; choose from {list(SUITES)}.")
    ctx = SuiteContext(Scale(scale), master_seed, workers)
    rows: List[CheckResult] = []
    for name in names:
        logger.info(f"Running suite {name} ({ctx.scale.value})")
        results = SUITES[name](ctx)
        failed = [r.check for r in results if not r.passed]
        if failed:
            logger.warning(f"Suite {name}: {len(failed)} failed check(s): {', '.join(failed)}")
        else:
            logger.info(f"Suite {name}: all {len(results)} checks passed")
        rows.extend(results)
    return pd.DataFrame(
        [[r.suite, r.check, r.value, r.threshold, r.passed] for r in rows],
        columns=VerifyCol.cols,
    )
