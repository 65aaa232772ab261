"""Monte Carlo and deterministic diagnostics of long-time behaviour."""

import logging
import math
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeRemainingColumn,
)
from scipy import stats

from sgflow.constants import (
    EXTINCTION_SUSTAIN,
    MIN_BATCHES,
    NEWTON_TOL,
    PILOT_OFFSET,
    SE_FACTOR,
    ErgodicCol,
    FunctionalKind,
    SviCol,
    TrajCol,
)
from sgflow.drift import DriftOperator, gauge_norm
from sgflow.evolve import SolverConfig, Trajectory, simulate_states, zero_path
from sgflow.noise import NoiseSpec, sample_path
from sgflow.spectral import SpectralSpace
from sgflow.utils import seed_block

logger = logging.getLogger("Ergodics")


class TestFunctional:
    """
    Bounded Lipschitz functional on H.

    Parameters
    ----------
    kind : FunctionalKind
        ``coordinate``: tanh((x, ê_k)_H) with ê_k = e_k/‖e_k‖_H.
        ``clipped_norm``: min(‖x‖_H, M).
        ``ball``: clip((R + w - ‖x‖_H)/w, 0, 1), a mollified indicator of the
        ball of radius R.
        ``constant``: the constant c.
    mode : int, optional
        1-based mode k of ``coordinate``.
    level : float, optional
        M, R or c.
    width : float, optional
        Mollification width w of ``ball``.
    name : Optional[str], optional
        Identifier in output tables.
    """

    __test__ = False

    def __init__(
        self,
        kind: Union[FunctionalKind, str],
        mode: int = 1,
        level: float = 1.0,
        width: float = 0.25,
        name: Optional[str] = None,
    ) -> None:
        """Initialize the functional."""
        self._kind = FunctionalKind(kind)
        if mode < 1:
            raise ValueError(f"mode must be at least 1, got {mode}.")
        if self._kind == FunctionalKind.BALL and width <= 0:
            raise ValueError(f"width must be positive, got {width}.")
        self._mode = int(mode)
        self._level = float(level)
        self._width = float(width)
        self._name = name or self._default_name()

    def _default_name(self) -> str:
        if self._kind == FunctionalKind.COORDINATE:
            return f"coord_{self._mode}"
        if self._kind == FunctionalKind.CLIPPED_NORM:
            return f"norm_min_{self._level:g}"
        if self._kind == FunctionalKind.BALL:
            return f"ball_{self._level:g}"
        return f"const_{self._level:g}"

    @property
    def kind(self) -> FunctionalKind:
        """Kind."""
        return self._kind

    @property
    def name(self) -> str:
        """Identifier."""
        return self._name

    @property
    def lipschitz(self) -> float:
        """Declared Lipschitz constant in H."""
        if self._kind == FunctionalKind.CONSTANT:
            return 0.0
        if self._kind == FunctionalKind.BALL:
            return 1.0 / self._width
        return 1.0

    @property
    def sup_bound(self) -> float:
        """sup |F|."""
        if self._kind == FunctionalKind.CLIPPED_NORM:
            return abs(self._level)
        if self._kind == FunctionalKind.CONSTANT:
            return abs(self._level)
        return 1.0

    def __repr__(self) -> str:
        """Return a string representation of the functional."""
        return f"TestFunctional(name={self._name}, lipschitz={self.lipschitz:g})"

    def values(self, coef: np.ndarray, norms: np.ndarray, h_weights: np.ndarray) -> np.ndarray:
        """
        Evaluate on many states at once.

        Parameters
        ----------
        coef : np.ndarray
            Spectral coefficients, shape (n, K).
        norms : np.ndarray
            ‖x‖_H of every state.
        h_weights : np.ndarray
            ‖e_k‖_H².

        Returns
        -------
        np.ndarray
            F of every state.
        """
        if self._kind == FunctionalKind.COORDINATE:
            k = self._mode - 1
            return np.tanh(coef[:, k] * np.sqrt(h_weights[k]))
        if self._kind == FunctionalKind.CLIPPED_NORM:
            return np.minimum(norms, self._level)
        if self._kind == FunctionalKind.BALL:
            return np.clip((self._level + self._width - norms) / self._width, 0.0, 1.0)
        return np.full(len(norms), self._level)

    def __call__(self, space: SpectralSpace, x: np.ndarray) -> float:
        """F(x)."""
        return float(evaluate(space, [self], np.atleast_2d(x))[0, 0])


def evaluate(
    space: SpectralSpace, functionals: Sequence[TestFunctional], states: np.ndarray
) -> np.ndarray:
    """Values of every functional on every state, shape (n_states, n_functionals)."""
    coef = space.coefficient_rows(states)
    hw = space.h_weights
    norms = np.sqrt((coef * coef) @ hw)
    return np.column_stack([f.values(coef, norms, hw) for f in functionals])


def default_functionals(space: SpectralSpace) -> List[TestFunctional]:
    """
    The fixed dictionary of eight functionals.

    Four low-mode coordinates, two clipped norms (M = 0.5, 1) and two ball
    indicators (R = 0.5, 1, w = 0.25).
    """
    n = min(4, space.n_modes)
    out = [TestFunctional(FunctionalKind.COORDINATE, mode=k) for k in range(1, n + 1)]
    out += [TestFunctional(FunctionalKind.CLIPPED_NORM, level=m) for m in (0.5, 1.0)]
    out += [TestFunctional(FunctionalKind.BALL, level=r) for r in (0.5, 1.0)]
    return out


def lipschitz_ratio(
    space: SpectralSpace, functional: TestFunctional, xs: np.ndarray, ys: np.ndarray
) -> float:
    """Largest |F(x) - F(y)| / ‖x - y‖_H over the pairs (xs[i], ys[i])."""
    fx = evaluate(space, [functional], xs)[:, 0]
    fy = evaluate(space, [functional], ys)[:, 0]
    diff = space.coefficient_rows(np.asarray(xs) - np.asarray(ys))
    dist = np.sqrt((diff * diff) @ space.h_weights)
    mask = dist > 0
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(fx - fy)[mask] / dist[mask]))


@dataclass
class OccupationEstimate:
    """
    Time averages (1/T) Σ_k dt F(X_k) over a block of paths.

    Attributes
    ----------
    functional_ids : List[str]
        Functional names, one column each.
    horizon : float
        T.
    seeds : List[int]
        Path seeds in path-index order.
    path_means : np.ndarray
        Time average per path, shape (n_paths, n_functionals).
    time_batches : np.ndarray
        Averages over 8 consecutive time blocks, shape (n_paths, 8, n_functionals).
    """

    functional_ids: List[str]
    horizon: float
    seeds: List[int]
    path_means: np.ndarray
    time_batches: np.ndarray

    @property
    def n_paths(self) -> int:
        """Number of paths."""
        return len(self.seeds)

    @property
    def estimate(self) -> np.ndarray:
        """Mean over paths."""
        return self.path_means.mean(axis=0)

    @property
    def batch_values(self) -> np.ndarray:
        """
        Batch means behind the standard error.

        Path means when there are at least 8 paths, otherwise the time blocks
        of every path.
        """
        if self.n_paths >= MIN_BATCHES:
            return self.path_means
        return self.time_batches.reshape(-1, self.time_batches.shape[-1])

    @property
    def stderr(self) -> np.ndarray:
        """Batch-means standard error."""
        values = self.batch_values
        if len(values) < 2:
            return np.zeros(values.shape[1])
        return values.std(axis=0, ddof=1) / np.sqrt(len(values))

    def merge(self, other: "OccupationEstimate") -> "OccupationEstimate":
        """
        Combine two disjoint path blocks.

        Raises
        ------
        ValueError
            If functionals or horizons differ.
        """
        if other.functional_ids != self.functional_ids or other.horizon != self.horizon:
            raise ValueError("Cannot merge estimates of different functionals or horizons.")
        return OccupationEstimate(
            self.functional_ids,
            self.horizon,
            self.seeds + other.seeds,
            np.vstack([self.path_means, other.path_means]),
            np.concatenate([self.time_batches, other.time_batches]),
        )

    def to_frame(self) -> pd.DataFrame:
        """Occupation table."""
        return pd.DataFrame(
            {
                ErgodicCol.FUNCTIONAL: self.functional_ids,
                ErgodicCol.T: self.horizon,
                ErgodicCol.ESTIMATE: self.estimate,
                ErgodicCol.STDERR: self.stderr,
                ErgodicCol.N_PATHS: self.n_paths,
            }
        )


# state of the current worker, set once per process
_PAYLOAD: Dict[str, Any] = {}


def _init_worker(payload: Dict[str, Any]) -> None:
    _PAYLOAD.clear()
    _PAYLOAD.update(payload)


def _map_paths(
    task: Callable[[Tuple[int, int]], Tuple[int, Any]],
    payload: Dict[str, Any],
    seeds: Sequence[int],
    workers: int = 1,
    description: str = "Simulating paths...",
    show_progress: bool = True,
) -> List[Any]:
    """Run ``task`` on every (index, seed), results ordered by index."""
    results: List[Any] = [None] * len(seeds)
    args = list(enumerate(seeds))
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TextColumn("•"),
        TimeRemainingColumn(),
        disable=not show_progress,
    ) as progress:
        bar = progress.add_task(f"[cyan]{description}", total=len(args))
        if workers <= 1:
            _init_worker(payload)
            for arg in args:
                i, res = task(arg)
                results[i] = res
                progress.advance(bar)
        else:
            with Pool(workers, initializer=_init_worker, initargs=(payload,)) as pool:
                for i, res in pool.imap_unordered(task, args):
                    results[i] = res
                    progress.advance(bar)
    return results


def _path_states(seed: int, starts: Sequence[np.ndarray]) -> List[np.ndarray]:
    op: DriftOperator = _PAYLOAD["op"]
    spec: NoiseSpec = _PAYLOAD["spec"]
    cfg: SolverConfig = _PAYLOAD["cfg"]
    path = sample_path(op.space, spec, seed, cfg.dt, cfg.n_steps, modes=cfg.m)
    return [simulate_states(op, x, path, cfg)[0] for x in starts]


def _occupation_task(arg: Tuple[int, int]) -> Tuple[int, Tuple[np.ndarray, np.ndarray]]:
    index, seed = arg
    states = _path_states(seed, [_PAYLOAD["x0"]])[0][:-1]
    values = evaluate(_PAYLOAD["op"].space, _PAYLOAD["functionals"], states)
    mean = values.mean(axis=0)
    if len(values) < MIN_BATCHES:
        blocks = np.tile(mean, (MIN_BATCHES, 1))
    else:
        blocks = np.array([b.mean(axis=0) for b in np.array_split(values, MIN_BATCHES)])
    return index, (mean, blocks)


def _terminal_task(arg: Tuple[int, int]) -> Tuple[int, List[np.ndarray]]:
    index, seed = arg
    return index, [s[-1] for s in _path_states(seed, _PAYLOAD["starts"])]


def occupation_average(
    op: DriftOperator,
    spec: NoiseSpec,
    x0: np.ndarray,
    functionals: Sequence[TestFunctional],
    cfg: SolverConfig,
    n_paths: int,
    master_seed: int,
    workers: int = 1,
    offset: int = 0,
    show_progress: bool = True,
) -> OccupationEstimate:
    """
    Estimate Q^T F(x₀) = (1/T) ∫₀ᵀ E F(X_t) dt with additive noise.

    Parameters
    ----------
    op : DriftOperator
        Drift.
    spec : NoiseSpec
        Additive noise law.
    x0 : np.ndarray
        Initial state.
    functionals : Sequence[TestFunctional]
        Functionals to average.
    cfg : SolverConfig
        Time stepping; T = cfg.horizon.
    n_paths : int
        Number of paths.
    master_seed : int
        Master seed; path i uses ``path_seed(master_seed, offset + i)``.
    workers : int, optional
        Worker processes, by default 1. The result does not depend on it.
    offset : int, optional
        First path index of the block, by default 0.
    show_progress : bool, optional
        Show a progress bar, by default True.

    Returns
    -------
    OccupationEstimate
        Left Riemann time averages per path with batch-means errors.

    Raises
    ------
    ValueError
        If n_paths < 1, or fewer than 8 paths are asked for on a horizon of
        fewer than 8 steps.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be positive, got {n_paths}.")
    if n_paths < MIN_BATCHES and cfg.n_steps < MIN_BATCHES:
        raise ValueError(
            f"Time batching needs at least {MIN_BATCHES} steps, got {cfg.n_steps}."
        )
    seeds = seed_block(master_seed, n_paths, offset)
    payload = {"op": op, "spec": spec, "cfg": cfg, "x0": x0, "functionals": list(functionals)}
    results = _map_paths(
        _occupation_task, payload, seeds, workers, "Occupation averages...", show_progress
    )
    est = OccupationEstimate(
        [f.name for f in functionals],
        cfg.horizon,
        seeds,
        np.array([r[0] for r in results]),
        np.array([r[1] for r in results]),
    )
    logger.info(
        f"Occupation averages over {n_paths} paths at T={cfg.horizon:g}: "
        + ", ".join(f"{n}={v:.4f}" for n, v in zip(est.functional_ids, est.estimate))
    )
    return est


def terminal_states(
    op: DriftOperator,
    spec: NoiseSpec,
    starts: Sequence[np.ndarray],
    cfg: SolverConfig,
    seeds: Sequence[int],
    workers: int = 1,
    show_progress: bool = False,
) -> np.ndarray:
    """X_T from every start on every path, shape (n_paths, n_starts, N)."""
    payload = {"op": op, "spec": spec, "cfg": cfg, "starts": list(starts)}
    results = _map_paths(
        _terminal_task, payload, seeds, workers, "Terminal states...", show_progress
    )
    return np.array(results)


@dataclass
class EPropertyResult:
    """Estimate of |P_t F(x) - P_t F(y)| against Lip(F)‖x - y‖_H."""

    lhs: float
    stderr: float
    bound: float

    @property
    def holds(self) -> bool:
        """lhs <= bound + 3 SE."""
        return self.lhs <= self.bound + SE_FACTOR * self.stderr + 10 * NEWTON_TOL


def eproperty_check(
    op: DriftOperator,
    spec: NoiseSpec,
    functional: TestFunctional,
    x: np.ndarray,
    y: np.ndarray,
    t: float,
    cfg: SolverConfig,
    n_paths: int,
    master_seed: int,
    workers: int = 1,
) -> EPropertyResult:
    """
    Equicontinuity of the transition semigroup on one functional.

    Both starts see the same paths, so each path contributes F(X_t^x) - F(X_t^y).
    """
    run_cfg = replace(cfg, horizon=t)
    seeds = seed_block(master_seed, n_paths)
    finals = terminal_states(op, spec, [x, y], run_cfg, seeds, workers)
    space = op.space
    diff = evaluate(space, [functional], finals[:, 0])[:, 0] - evaluate(
        space, [functional], finals[:, 1]
    )[:, 0]
    se = float(diff.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    res = EPropertyResult(
        float(abs(diff.mean())), se, functional.lipschitz * space.norm_H(x - y)
    )
    logger.debug(f"e-property at t={t:g}: {res}")
    return res


def pilot_ball(
    op: DriftOperator,
    spec: NoiseSpec,
    x: np.ndarray,
    cfg: SolverConfig,
    n_pilot: int,
    master_seed: int,
    workers: int = 1,
) -> float:
    """Median of ‖X_T - u(T)x‖_H² over a pilot block disjoint from the main seeds."""
    seeds = seed_block(master_seed, n_pilot, PILOT_OFFSET)
    return float(np.median(_squared_distances(op, spec, x, cfg, seeds, workers)))


def _squared_distances(
    op: DriftOperator,
    spec: NoiseSpec,
    x: np.ndarray,
    cfg: SolverConfig,
    seeds: Sequence[int],
    workers: int,
) -> np.ndarray:
    space = op.space
    target = simulate_states(op, x, zero_path(op, cfg.dt, cfg.n_steps), cfg)[0][-1]
    finals = terminal_states(op, spec, [x], cfg, seeds, workers)[:, 0]
    coef = space.coefficient_rows(finals - target)
    return (coef * coef) @ space.h_weights


@dataclass
class StabilityResult:
    """Share of paths ending in the ball of radius² eps_ball around u(T)x."""

    fraction: float
    hits: int
    n_paths: int
    eps_ball: float


def stochastic_stability(
    op: DriftOperator,
    spec: NoiseSpec,
    x: np.ndarray,
    cfg: SolverConfig,
    eps_ball: float,
    n_paths: int,
    master_seed: int,
    workers: int = 1,
) -> StabilityResult:
    """Fraction of paths with ‖X_T - u(T)x‖_H² <= eps_ball."""
    seeds = seed_block(master_seed, n_paths)
    dist = _squared_distances(op, spec, x, cfg, seeds, workers)
    hits = int(np.sum(dist <= eps_ball))
    return StabilityResult(hits / n_paths, hits, n_paths, eps_ball)


def _theta_task(arg: Tuple[int, int]) -> Tuple[int, Tuple[np.ndarray, float]]:
    index, seed = arg
    op: DriftOperator = _PAYLOAD["op"]
    states = _path_states(seed, [_PAYLOAD["x0"]])[0][:-1]
    thetas = np.array([op.lyapunov_theta(s) for s in states])
    fractions = np.array([np.mean(thetas <= r) for r in _PAYLOAD["radii"]])
    return index, (fractions, float(thetas.mean()))


def concentration_check(
    op: DriftOperator,
    spec: NoiseSpec,
    x: np.ndarray,
    radii: Sequence[float],
    cfg: SolverConfig,
    n_paths: int,
    master_seed: int,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Occupation of the Lyapunov sublevel sets {Θ <= R}.

    Ĉ is measured as the path mean of (1/T)∫Θ(X_s)ds divided by ‖x‖_H² + 1,
    and each row is checked against the Markov bound 1 - Ĉ(‖x‖_H² + 1)/R.

    Returns
    -------
    pd.DataFrame
        One row per R with fraction, standard error, bound and verdict.
    """
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise ValueError("Sublevel radii must be positive.")
    seeds = seed_block(master_seed, n_paths)
    payload = {"op": op, "spec": spec, "cfg": cfg, "x0": x, "radii": radii}
    results = _map_paths(_theta_task, payload, seeds, workers, "Lyapunov occupation...")
    fractions = np.array([r[0] for r in results])
    mean_theta = float(np.mean([r[1] for r in results]))
    scale = op.space.norm_H(x) ** 2 + 1.0
    c_hat = mean_theta / scale
    logger.info(f"Empirical Lyapunov constant C={c_hat:.4g}")
    se = fractions.std(axis=0, ddof=1) / np.sqrt(n_paths) if n_paths > 1 else np.zeros(len(radii))
    est = fractions.mean(axis=0)
    bound = 1.0 - c_hat * scale / np.asarray(radii)
    return pd.DataFrame(
        {
            ErgodicCol.R: radii,
            ErgodicCol.FRACTION: est,
            ErgodicCol.STDERR: se,
            ErgodicCol.MARKOV_BOUND: bound,
            ErgodicCol.HOLDS: est >= bound - SE_FACTOR * se - 1e-12,
        }
    )


@dataclass
class ExtinctionReport:
    """
    Measured extinction time and the coercivity bound.

    Attributes
    ----------
    time : float
        First time of sustained extinction, inf if none.
    step : Optional[int]
        Its step index.
    c_hat : float
        min_k 2⟨η_k, X_{k+1}⟩ / ‖X_{k+1}‖_H^α along the trajectory.
    bound : float
        T̂_B = ‖x₀‖_H^(2-α) 2 / (ĉ (2 - α)), inf when α >= 2 or ĉ <= 0.
    """

    time: float
    step: Optional[int]
    c_hat: float
    bound: float

    @property
    def holds(self) -> bool:
        """time <= 1.05 T̂_B."""
        return self.time <= 1.05 * self.bound

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a dictionary."""
        return {
            "time": self.time,
            "step": self.step,
            "c_hat": self.c_hat,
            "bound": self.bound,
            "holds": self.holds,
        }


def extinction_time(
    op: DriftOperator,
    traj: Trajectory,
    alpha: Optional[float] = None,
    threshold: float = 1e-10,
    sustain: int = EXTINCTION_SUSTAIN,
) -> ExtinctionReport:
    """
    Extinction time of a deterministic trajectory with its coercivity bound.

    Parameters
    ----------
    op : DriftOperator
        Drift the trajectory was computed with.
    traj : Trajectory
        Deterministic trajectory with selections.
    alpha : Optional[float], optional
        Coercivity exponent in [1, 2); None skips the bound.
    threshold : float, optional
        Extinction threshold in ‖·‖_H, by default 1e-10.
    sustain : int, optional
        Consecutive steps below the threshold, by default 3.

    Returns
    -------
    ExtinctionReport
        The report; ĉ only uses steps with ‖X_{k+1}‖_H >= max(threshold, 1e-4‖x₀‖_H).
    """
    space = op.space
    step = traj.extinction_step(threshold, sustain)
    ext = math.inf if step is None else float(traj.times[step] - traj.times[0])
    norms = traj.norms_H
    c_hat = math.inf
    if traj.selections is not None:
        floor = max(threshold, 1e-4 * norms[0])
        for k in range(traj.n_steps):
            if norms[k + 1] < floor:
                continue
            power = norms[k + 1] ** (alpha if alpha is not None else 2.0)
            pair = space.pairing(traj.selections[k], traj.states[k + 1])
            c_hat = min(c_hat, 2.0 * pair / power)
    if alpha is None or alpha >= 2 or c_hat <= 0:
        bound = math.inf
    elif math.isinf(c_hat):
        bound = 0.0
    else:
        bound = norms[0] ** (2.0 - alpha) * 2.0 / (c_hat * (2.0 - alpha))
    report = ExtinctionReport(ext, step, float(c_hat), float(bound))
    logger.info(f"Extinction at {ext:g} with bound {bound:g} (c={c_hat:.4g})")
    return report


def fit_power_law(
    times: np.ndarray,
    values: np.ndarray,
    window: Tuple[float, float],
    floor: float = 0.0,
) -> float:
    """
    Least-squares slope of log(values) against log(times) on a window.

    Raises
    ------
    ValueError
        If the window is empty, starts at t <= 0 or holds fewer than two
        values above the floor.
    """
    t0, t1 = window
    if not 0 < t0 < t1:
        raise ValueError(f"Window must satisfy 0 < t0 < t1, got {window}.")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if t0 < times[0] - 1e-12 or t1 > times[-1] + 1e-12:
        raise ValueError(f"Window {window} lies outside [{times[0]}, {times[-1]}].")
    mask = (times >= t0 - 1e-12) & (times <= t1 + 1e-12) & (values > floor)
    if mask.sum() < 2:
        raise ValueError(f"Fewer than two positive values in window {window}.")
    fit = stats.linregress(np.log(times[mask]), np.log(values[mask]))
    return float(fit.slope)


def decay_rate_fit(
    traj: Trajectory, window: Tuple[float, float], floor: float = 0.0
) -> float:
    """Slope of log‖X_t‖_H against log t over the window, ignoring norms <= floor."""
    return fit_power_law(traj.times, traj.norms_H, window, floor)


def plasma_decay_bound(
    op: DriftOperator, traj: Trajectory, tol: float = NEWTON_TOL
) -> Tuple[pd.DataFrame, bool]:
    """
    A-priori bounds of a deterministic plasma trajectory.

    Returns
    -------
    Tuple[pd.DataFrame, bool]
        Per step: t, Θ(X_k), ‖x₀‖_H²/(2t) and the gauge norm; and whether
        Θ(X_k) <= ‖x₀‖_H²/(2t_k) + 10 tol for every k >= 1.
    """
    space = op.space
    t = traj.times - traj.times[0]
    theta_vals = traj.diagnostics[TrajCol.THETA].to_numpy()
    x0_sq = traj.norms_H[0] ** 2
    with np.errstate(divide="ignore"):
        bound = np.where(t > 0, x0_sq / (2.0 * t), np.inf)
    gauges = [gauge_norm(space, x) for x in traj.states]
    table = pd.DataFrame(
        {
            TrajCol.K: np.arange(len(t)),
            TrajCol.T: traj.times,
            TrajCol.THETA: theta_vals,
            "bound": bound,
            "gauge": gauges,
        }
    )
    holds = bool(np.all(theta_vals[1:] <= bound[1:] + 10 * tol))
    return table, holds


def _svi_task(arg: Tuple[int, int]) -> Tuple[int, np.ndarray]:
    index, seed = arg
    op: DriftOperator = _PAYLOAD["op"]
    spec: NoiseSpec = _PAYLOAD["spec"]
    cfg: SolverConfig = _PAYLOAD["cfg"]
    delta = _PAYLOAD["delta"]
    space = op.space
    path = sample_path(space, spec, seed, cfg.dt, cfg.n_steps, modes=cfg.m)
    xs, _, _ = simulate_states(op, _PAYLOAD["x0"], path, cfg)
    zs, gs, _ = simulate_states(op, _PAYLOAD["z0"], path, cfg)
    lhs_int = rhs_int = 0.0
    rows = []
    checkpoints = set(_PAYLOAD["steps"])
    start = 0.5 * space.norm_H(xs[0] - zs[0]) ** 2
    for k in range(cfg.n_steps):
        lhs_int += cfg.dt * op.energy_phi(xs[k + 1], delta)
        rhs_int += cfg.dt * (
            op.energy_phi(zs[k + 1], delta) + space.pairing(gs[k], xs[k + 1] - zs[k + 1])
        )
        if k + 1 in checkpoints:
            lhs = 0.5 * space.norm_H(xs[k + 1] - zs[k + 1]) ** 2 + lhs_int
            rows.append([lhs, start + rhs_int])
    return index, np.array(rows)


def svi_check(
    op: DriftOperator,
    spec: NoiseSpec,
    x: np.ndarray,
    z0: np.ndarray,
    cfg: SolverConfig,
    n_paths: int,
    master_seed: int,
    fractions: Sequence[float] = (0.25, 0.5, 1.0),
    workers: int = 1,
) -> pd.DataFrame:
    """
    Monte Carlo check of the variational inequality with additive noise.

    The test pair is Z, the solution from z0 on the same path, with G its
    recorded selection. Each checkpoint compares
    ½‖X_t - Z_t‖² + ∫φ(X) against ½‖x - z0‖² + ∫φ(Z) + ∫(G, X - Z)_H.

    Returns
    -------
    pd.DataFrame
        One row per checkpoint; ``holds`` when margin >= -3 SE - 10(dt + δ).
    """
    steps = sorted({max(1, int(round(f * cfg.n_steps))) for f in fractions})
    delta = op.delta
    if delta == 0 and op.graph.is_singular:
        delta = op.newton.delta_ladder[-1]
    seeds = seed_block(master_seed, n_paths)
    payload = {
        "op": op,
        "spec": spec,
        "cfg": cfg,
        "x0": x,
        "z0": z0,
        "steps": steps,
        "delta": delta,
    }
    results = np.array(_map_paths(_svi_task, payload, seeds, workers, "SVI terms..."))
    lhs, rhs = results[:, :, 0], results[:, :, 1]
    margin = rhs - lhs
    se = margin.std(axis=0, ddof=1) / np.sqrt(n_paths) if n_paths > 1 else np.zeros(len(steps))
    slack = 10.0 * (cfg.dt + delta)
    mean_margin = margin.mean(axis=0)
    return pd.DataFrame(
        {
            SviCol.T: [s * cfg.dt for s in steps],
            SviCol.LHS: lhs.mean(axis=0),
            SviCol.RHS: rhs.mean(axis=0),
            SviCol.MARGIN: mean_margin,
            SviCol.STDERR: se,
            SviCol.SLACK: slack,
            SviCol.HOLDS: mean_margin >= -SE_FACTOR * se - slack,
        }
    )


def weak_law_check(
    op: DriftOperator,
    spec: NoiseSpec,
    x: np.ndarray,
    functionals: Sequence[TestFunctional],
    cfg: SolverConfig,
    seeds: Tuple[int, int],
) -> pd.DataFrame:
    """
    Single-path time averages from two independent seeds.

    Returns
    -------
    pd.DataFrame
        Per functional: both averages, their time-batch errors, the gap and
        whether it is within 3 combined standard errors.
    """
    a, b = (
        occupation_average(op, spec, x, functionals, cfg, 1, s, show_progress=False)
        for s in seeds
    )
    se = np.sqrt(a.stderr**2 + b.stderr**2)
    gap = np.abs(a.estimate - b.estimate)
    return pd.DataFrame(
        {
            ErgodicCol.FUNCTIONAL: a.functional_ids,
            "average_a": a.estimate,
            "average_b": b.estimate,
            "stderr_a": a.stderr,
            "stderr_b": b.stderr,
            "gap": gap,
            ErgodicCol.HOLDS: gap <= SE_FACTOR * se,
        }
    )


@dataclass
class ErgodicComparison:
    """Occupation averages from two starts on one seed block."""

    x: OccupationEstimate
    y: OccupationEstimate
    gaps: np.ndarray = field(init=False)
    combined_se: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        """Compute the gaps."""
        self.gaps = np.abs(self.x.estimate - self.y.estimate)
        self.combined_se = np.sqrt(self.x.stderr**2 + self.y.stderr**2)

    @property
    def within(self) -> np.ndarray:
        """Whether each gap is within 3 combined standard errors."""
        return self.gaps <= SE_FACTOR * self.combined_se
