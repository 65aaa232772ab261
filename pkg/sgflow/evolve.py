"""Implicit time stepping, freeze-the-noise iteration and limit-solution drivers."""

import logging
import math
import struct
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from tqdm import tqdm

from sgflow.constants import (
    EXTINCTION_SUSTAIN,
    EXTINCTION_THRESHOLD,
    FORMAT_VERSION,
    HEADER_FORMAT,
    MAGIC,
    PICARD_MAX_SWEEPS,
    PICARD_MAX_WINDOW,
    PICARD_TOL,
    S_BOUND_MAX_DOUBLINGS,
    NoiseKind,
    PicardCol,
    TrajCol,
)
from sgflow.drift import DriftOperator, NonConvergence
from sgflow.noise import (
    DiffusionCoefficient,
    NoisePath,
    NoiseSpec,
    multiplicative_increment,
    sample_path,
)

logger = logging.getLogger("Evolve")

Increment = Callable[[int, np.ndarray], np.ndarray]


class PicardStall(RuntimeError):
    """
    Freeze-the-noise iteration did not converge within the sweep limit.

    Parameters
    ----------
    window : int
        Index of the failing window.
    sweeps : int
        Sweeps spent.
    gap : float
        Last sup-H gap between consecutive sweeps.
    """

    def __init__(self, window: int, sweeps: int, gap: float) -> None:
        """Initialize the error."""
        self.window = window
        self.sweeps = sweeps
        self.gap = gap
        super().__init__(
            f"Picard iteration stalled in window {window} after {sweeps} sweeps "
            f"(gap={gap:.3e}); shrink the window length."
        )


@dataclass
class SolverConfig:
    """
    Time stepping parameters.

    Attributes
    ----------
    dt : float
        Time step.
    horizon : float
        Final time, a multiple of dt.
    eps : float
        Viscosity ε.
    delta : float
        Graph smoothing δ used to build the drift.
    m : Optional[int]
        Galerkin mode count for the noise, None for all modes.
    picard_window : Optional[float]
        Picard window length, None for the coefficient's default.
    picard_tol : float
        Sup-H gap at which the Picard sweeps stop.
    picard_max_sweeps : int
        Maximum sweeps per window.
    extinction_threshold : float
        H-norm below which a state counts as extinct.
    """

    dt: float
    horizon: float
    eps: float = 0.0
    delta: float = 0.0
    m: Optional[int] = None
    picard_window: Optional[float] = None
    picard_tol: float = PICARD_TOL
    picard_max_sweeps: int = PICARD_MAX_SWEEPS
    extinction_threshold: float = EXTINCTION_THRESHOLD

    def __post_init__(self) -> None:
        """Validate the configuration."""
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self) -> List[str]:
        """Return a message for every invalid field."""
        errors = []
        if not self.dt > 0:
            errors.append(f"dt must be positive, got {self.dt}")
        elif not self.horizon > 0:
            errors.append(f"horizon must be positive, got {self.horizon}")
        elif abs(self.horizon / self.dt - round(self.horizon / self.dt)) > 1e-6:
            errors.append(f"horizon {self.horizon} is not a multiple of dt {self.dt}")
        if self.eps < 0:
            errors.append(f"eps must be nonnegative, got {self.eps}")
        if self.delta < 0:
            errors.append(f"delta must be nonnegative, got {self.delta}")
        if self.m is not None and self.m < 1:
            errors.append(f"m must be at least 1, got {self.m}")
        if self.picard_window is not None and not self.picard_window > 0:
            errors.append(f"picard_window must be positive, got {self.picard_window}")
        if self.picard_max_sweeps < 1:
            errors.append("picard_max_sweeps must be at least 1")
        return errors

    @property
    def n_steps(self) -> int:
        """Number of steps horizon / dt."""
        return int(round(self.horizon / self.dt))

    def with_steps(self, n_steps: int) -> "SolverConfig":
        """Copy with horizon n_steps * dt."""
        return replace(self, horizon=n_steps * self.dt)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a dictionary; None values are dropped."""
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        """Create from a dictionary."""
        return cls(**data)


class Trajectory:
    """
    States X_k on t_k = k dt with selections and per-step diagnostics.

    Parameters
    ----------
    times : np.ndarray
        Times, length K + 1, strictly increasing with constant step.
    states : np.ndarray
        States, shape (K + 1, N).
    diagnostics : pd.DataFrame
        One row per state with the :class:`TrajCol` columns.
    selections : Optional[np.ndarray], optional
        η_k ∈ A(X_{k+1}), shape (K, N).
    dim, n : int
        Grid shape, kept for the binary dump.

    Raises
    ------
    ValueError
        If times and states disagree in length or the step is not constant.
    """

    def __init__(
        self,
        times: np.ndarray,
        states: np.ndarray,
        diagnostics: pd.DataFrame,
        selections: Optional[np.ndarray] = None,
        dim: int = 1,
        n: int = 0,
    ) -> None:
        """Initialize the trajectory."""
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.diagnostics = diagnostics
        self.selections = selections
        self.dim = dim
        self.n = n
        self.picard_log: Optional[pd.DataFrame] = None
        self.__check_length()

    def __check_length(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError(
                f"{len(self.times)} times but {len(self.states)} states."
            )
        if len(self.times) > 1:
            steps = np.diff(self.times)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, steps[0]):
                raise ValueError("Times must increase with a constant step.")

    def __repr__(self) -> str:
        """Return a string representation of the trajectory."""
        return (
            f"Trajectory(n_steps={self.n_steps}, dt={self.dt:g}, "
            f"horizon={self.times[-1]:g})"
        )

    @property
    def n_steps(self) -> int:
        """Number of steps K."""
        return len(self.times) - 1

    @property
    def dt(self) -> float:
        """Time step."""
        return float(self.times[1] - self.times[0]) if self.n_steps else 0.0

    @property
    def norms_H(self) -> np.ndarray:
        """‖X_k‖_H."""
        return self.diagnostics[TrajCol.NORM_H].to_numpy()

    @property
    def final(self) -> np.ndarray:
        """Terminal state."""
        return self.states[-1]

    def extinction_step(
        self,
        threshold: float = EXTINCTION_THRESHOLD,
        sustain: int = EXTINCTION_SUSTAIN,
    ) -> Optional[int]:
        """First k with ‖X_j‖_H <= threshold for j = k, ..., k + sustain - 1."""
        below = self.norms_H <= threshold
        for k in range(len(below) - sustain + 1):
            if below[k : k + sustain].all():
                return k
        return None

    def to_frame(self) -> pd.DataFrame:
        """Diagnostics table."""
        return self.diagnostics.copy()

    def write_csv(self, path: str) -> None:
        """Write the diagnostics table."""
        self.diagnostics.to_csv(path, index=False)
        logger.info(f"Wrote trajectory diagnostics to {path}")

    def write_states(self, path: str) -> None:
        """Write the full states with the SGFL header."""
        write_states(path, self.states, self.dim, self.n)


def write_states(path: str, states: np.ndarray, dim: int, n: int) -> None:
    """
    Binary dump of states.

    A 16-byte little-endian header (magic "SGFL", version, dim, n) followed by
    the states as row-major little-endian float64.
    """
    header = struct.pack(HEADER_FORMAT, MAGIC, FORMAT_VERSION, dim, n)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(states, dtype="<f8").tobytes())


def read_states(path: str) -> Tuple[int, int, np.ndarray]:
    """
    Read a binary dump.

    Returns
    -------
    Tuple[int, int, np.ndarray]
        dim, n and the states of shape (K + 1, n ** dim).

    Raises
    ------
    ValueError
        If the magic or version does not match.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    size = struct.calcsize(HEADER_FORMAT)
    magic, version, dim, n = struct.unpack(HEADER_FORMAT, raw[:size])
    if magic != MAGIC:
        raise ValueError(f"{path} is not a state dump (magic {magic!r}).")
    if version != FORMAT_VERSION:
        raise ValueError(f"Unsupported dump version {version}.")
    data = np.frombuffer(raw[size:], dtype="<f8")
    return dim, n, data.reshape(-1, n**dim)


def _diagnostics(
    op: DriftOperator, times: np.ndarray, states: np.ndarray, iters: np.ndarray
) -> pd.DataFrame:
    space = op.space
    rows = []
    for k, (t, x) in enumerate(zip(times, states)):
        norm_s, norm_h, _ = space.norms(x)
        rows.append(
            [k, t, norm_h, norm_s, op.energy_phi(x), op.lyapunov_theta(x), int(iters[k])]
        )
    return pd.DataFrame(rows, columns=TrajCol.cols)


def _make_trajectory(
    op: DriftOperator,
    dt: float,
    states: np.ndarray,
    selections: np.ndarray,
    iters: np.ndarray,
    t0: float = 0.0,
) -> Trajectory:
    times = t0 + dt * np.arange(len(states))
    grid = op.space.grid
    return Trajectory(
        times,
        states,
        _diagnostics(op, times, states, iters),
        selections,
        grid.dim,
        grid.n,
    )


def step_implicit(
    op: DriftOperator, x: np.ndarray, increment: np.ndarray, dt: float
) -> np.ndarray:
    """
    One Lie-splitting step: add the increment, then apply the drift resolvent.

    Parameters
    ----------
    op : DriftOperator
        Drift.
    x : np.ndarray
        X_k.
    increment : np.ndarray
        ΔN_k.
    dt : float
        Step.

    Returns
    -------
    np.ndarray
        X_{k+1} = (I + dt A)⁻¹(X_k + ΔN_k).
    """
    return op.resolvent(dt, x + increment)


def step_viscous(
    op: DriftOperator,
    x: np.ndarray,
    g: np.ndarray,
    increment: np.ndarray,
    dt: float,
    eps: float,
) -> np.ndarray:
    """One step of the viscous scheme u + dt A(u) + dt ε T(u - g) = X_k + ΔN_k."""
    return op.viscous_resolvent(dt, eps, g, x + increment)


def _march(
    op: DriftOperator,
    x0: np.ndarray,
    n_steps: int,
    dt: float,
    eps: float,
    increment: Increment,
    g0: Optional[np.ndarray] = None,
    verbose: bool = False,
    offset: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Run n_steps viscous steps; returns states, selections, iterations and g."""
    space = op.space
    states = np.empty((n_steps + 1, space.size))
    selections = np.empty((n_steps, space.size))
    iters = np.zeros(n_steps + 1, dtype=int)
    states[0] = x0
    g = np.zeros(space.size) if g0 is None else g0.copy()
    for k in tqdm(range(n_steps), disable=not verbose, desc="Stepping"):
        dn = increment(k, states[k])
        g = g + dn
        f = states[k] + dn
        try:
            res = op.solve(dt, f, eps=eps, g=g)
        except NonConvergence as err:
            raise NonConvergence(err.residual, err.iterations, offset + k) from err
        states[k + 1] = res.u
        eta = (f - res.u) / dt
        if eps > 0:
            eta = eta - eps * (space.laplacian @ (res.u - g))
        selections[k] = eta
        iters[k + 1] = res.iterations
    return states, selections, iters, g


def zero_path(op: DriftOperator, dt: float, n_steps: int) -> NoisePath:
    """Deterministic path with all increments zero."""
    return sample_path(op.space, NoiseSpec(), 0, dt, n_steps, modes=1)


def solve_additive(
    op: DriftOperator,
    x0: np.ndarray,
    path: NoisePath,
    cfg: SolverConfig,
    g0: Optional[np.ndarray] = None,
    verbose: bool = False,
) -> Trajectory:
    """
    Pathwise solution with additive noise by implicit Lie splitting.

    Parameters
    ----------
    op : DriftOperator
        Drift.
    x0 : np.ndarray
        Initial state.
    path : NoisePath
        Noise path with the same dt and at least cfg.n_steps increments.
    cfg : SolverConfig
        Time stepping parameters; ``cfg.m`` truncates the noise.
    g0 : Optional[np.ndarray], optional
        Value of the cumulative noise at the start, by default 0. Only the
        viscous term sees it.
    verbose : bool, optional
        Show a progress bar, by default False.

    Returns
    -------
    Trajectory
        States, selections η_k = (X_k + ΔN_k - X_{k+1})/dt - ε T(X_{k+1} - g),
        and diagnostics.

    Raises
    ------
    ValueError
        If the path does not match the configuration.
    NonConvergence
        With the failing step index.
    """
    states, selections, iters = simulate_states(op, x0, path, cfg, g0, verbose)
    return _make_trajectory(op, cfg.dt, states, selections, iters)


def _check_path(path: NoisePath, cfg: SolverConfig) -> None:
    if abs(path.dt - cfg.dt) > 1e-12 * cfg.dt:
        raise ValueError(f"Path dt {path.dt} differs from solver dt {cfg.dt}.")
    if path.n_steps < cfg.n_steps:
        raise ValueError(
            f"Path has {path.n_steps} increments, {cfg.n_steps} are needed."
        )


def simulate_states(
    op: DriftOperator,
    x0: np.ndarray,
    path: NoisePath,
    cfg: SolverConfig,
    g0: Optional[np.ndarray] = None,
    verbose: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw states, selections and Newton iterations of :func:`solve_additive`."""
    x0 = op.space.check_vector(x0)
    n_steps = cfg.n_steps
    _check_path(path, cfg)
    if cfg.m is not None and cfg.m < path.n_modes:
        path = path.project(cfg.m)

    def increment(k: int, _state: np.ndarray) -> np.ndarray:
        return path.increment(k)

    states, selections, iters, _ = _march(
        op, x0, n_steps, cfg.dt, cfg.eps, increment, g0, verbose
    )
    return states, selections, iters


def solve_multiplicative(
    op: DriftOperator,
    x0: np.ndarray,
    coeff: DiffusionCoefficient,
    seed: int,
    cfg: SolverConfig,
    verbose: bool = False,
    path: Optional[NoisePath] = None,
) -> Trajectory:
    """
    Multiplicative Wiener noise by freezing the noise on short windows.

    On each window the sweep Z^{j+1} solves the additive problem with increments
    β(Z^j_k) b ⊙ ΔW_k, starting from Z^0 ≡ window start, until the sup-H gap
    between sweeps drops below ``cfg.picard_tol``. Windows are chained by their
    terminal state.

    Parameters
    ----------
    op : DriftOperator
        Drift.
    x0 : np.ndarray
        Initial state.
    coeff : DiffusionCoefficient
        Diffusion coefficient.
    seed : int
        Seed of the Wiener increments; the additive solve with the path drawn
        from the same seed and amplitudes sees identical increments.
    cfg : SolverConfig
        Time stepping and Picard parameters.
    verbose : bool, optional
        Log every sweep at INFO level, by default False.
    path : Optional[NoisePath], optional
        Replayed Wiener path, for instance from :meth:`NoisePath.read_csv`; its
        standard increments replace the ones drawn from ``seed``.

    Returns
    -------
    Trajectory
        The solution, with the sweep log in ``picard_log``.

    Raises
    ------
    PicardStall
        If a window exhausts ``cfg.picard_max_sweeps``.
    ValueError
        If the replayed path has no standard increments or does not match
        ``cfg`` and ``coeff``.
    """
    space = op.space
    x = space.check_vector(x0)
    n_steps = cfg.n_steps
    if path is None:
        spec = NoiseSpec(kind=NoiseKind.WIENER, sigma=coeff.sigma, rho=coeff.rho)
        path = sample_path(space, spec, seed, cfg.dt, n_steps, modes=coeff.modes)
    elif path.standard is None:
        raise ValueError(
            "The replayed path carries no standard increments; load it with its Wiener law (sigma, rho)."
        )
    else:
        _check_path(path, cfg)
        if path.n_modes != coeff.modes:
            raise ValueError(f"Path has {path.n_modes} modes, the coefficient {coeff.modes}.")
    standard = path.standard
    window = cfg.picard_window or coeff.default_window(PICARD_MAX_WINDOW)
    width = max(1, int(round(window / cfg.dt)))
    logger.debug(f"Picard window {window:g} ({width} steps)")

    all_states = [x[None, :]]
    all_sel = []
    all_iters = [np.zeros(1, dtype=int)]
    log_rows = []
    g = np.zeros(space.size)
    for w_idx, start in enumerate(range(0, n_steps, width)):
        steps = min(width, n_steps - start)
        frozen = np.tile(x, (steps + 1, 1))
        prev_gap = math.nan
        gap = math.inf
        for sweep in range(1, cfg.picard_max_sweeps + 1):

            def increment(k: int, _state: np.ndarray, frozen=frozen) -> np.ndarray:
                return multiplicative_increment(
                    coeff, frozen[k], standard[start + k], path.basis
                )

            states, sel, iters, g_end = _march(
                op, x, steps, cfg.dt, cfg.eps, increment, g, offset=start
            )
            gap = max(space.norm_H(states[k] - frozen[k]) for k in range(steps + 1))
            ratio = gap / prev_gap if prev_gap > 0 else math.nan
            log_rows.append([w_idx, sweep, gap, ratio])
            msg = f"window {w_idx} sweep {sweep}: gap={gap:.3e} ratio={ratio:.3g}"
            if verbose:
                logger.info(msg)
            else:
                logger.debug(msg)
            frozen = states
            if gap < cfg.picard_tol:
                break
            prev_gap = gap
        else:
            raise PicardStall(w_idx, cfg.picard_max_sweeps, gap)
        all_states.append(states[1:])
        all_sel.append(sel)
        all_iters.append(iters[1:])
        x = states[-1]
        g = g_end
    traj = _make_trajectory(
        op,
        cfg.dt,
        np.vstack(all_states),
        np.vstack(all_sel),
        np.concatenate(all_iters),
    )
    traj.picard_log = pd.DataFrame(log_rows, columns=PicardCol.cols)
    return traj


@dataclass
class LadderLevel:
    """
    One rung of a refinement ladder.

    Attributes
    ----------
    eps : float
        Viscosity.
    delta : float
        Graph smoothing.
    m : Optional[int]
        Galerkin mode count of the noise, None for all.
    smoothing : Optional[float]
        Resolvent index n for x₀ ↦ J_n x₀, None to keep x₀.
    """

    eps: float
    delta: float = 0.0
    m: Optional[int] = None
    smoothing: Optional[float] = None


@dataclass
class LimitSolution:
    """Finest trajectory of a ladder and the Cauchy gaps between rungs."""

    trajectory: Trajectory
    gaps: List[float]
    trajectories: List[Trajectory] = field(default_factory=list)


def _check_ladder(ladder: Sequence[LadderLevel], n_modes: int) -> None:
    if len(ladder) < 2:
        raise ValueError("A ladder needs at least two levels.")
    for a, b in zip(ladder, ladder[1:]):
        ma = n_modes if a.m is None else a.m
        mb = n_modes if b.m is None else b.m
        na = math.inf if a.smoothing is None else a.smoothing
        nb = math.inf if b.smoothing is None else b.smoothing
        if b.eps > a.eps or b.delta > a.delta or mb < ma or nb < na:
            raise ValueError(f"Ladder is not refining between {a} and {b}.")
        if (b.eps, b.delta, mb, nb) == (a.eps, a.delta, ma, na):
            raise ValueError(f"Ladder repeats the level {a}; rungs must strictly refine.")


def sup_gap(op: DriftOperator, a: Trajectory, b: Trajectory, stride: int = 1) -> float:
    """sup_k ‖a_k - b_{stride k}‖_H over the common times."""
    space = op.space
    return max(
        space.norm_H(a.states[k] - b.states[stride * k]) for k in range(len(a.states))
    )


def limit_solution(
    op: DriftOperator,
    x0: np.ndarray,
    cfg: SolverConfig,
    ladder: Sequence[LadderLevel],
    path: Optional[NoisePath] = None,
) -> LimitSolution:
    """
    Solve along a refinement ladder and report the Cauchy gaps.

    Parameters
    ----------
    op : DriftOperator
        Drift; each level replaces its δ.
    x0 : np.ndarray
        Possibly rough initial state.
    cfg : SolverConfig
        Base configuration; each level replaces ε.
    ladder : Sequence[LadderLevel]
        Refining levels (ε, δ nonincreasing, m nondecreasing).
    path : Optional[NoisePath], optional
        Common noise path, by default zero noise.

    Returns
    -------
    LimitSolution
        Finest trajectory and sup_t ‖X^(i+1)_t - X^(i)_t‖_H for consecutive levels.
    """
    space = op.space
    x0 = space.check_vector(x0)
    _check_ladder(ladder, space.n_modes)
    path = path or zero_path(op, cfg.dt, cfg.n_steps)
    trajectories = []
    for level in ladder:
        start = x0 if level.smoothing is None else space.resolvent_J(level.smoothing, x0)
        level_path = path
        if level.m is not None and level.m < path.n_modes:
            level_path = path.project(level.m)
        level_cfg = replace(cfg, eps=level.eps, delta=level.delta, m=None)
        traj = solve_additive(op.with_delta(level.delta), start, level_path, level_cfg)
        trajectories.append(traj)
    gaps = [sup_gap(op, a, b) for a, b in zip(trajectories, trajectories[1:])]
    logger.info(f"Ladder gaps: {', '.join(f'{g:.3e}' for g in gaps)}")
    return LimitSolution(trajectories[-1], gaps, trajectories)


def ladder_independence(
    op: DriftOperator,
    x0: np.ndarray,
    cfg: SolverConfig,
    ladder_a: Sequence[LadderLevel],
    ladder_b: Sequence[LadderLevel],
    path: Optional[NoisePath] = None,
) -> float:
    """Sup-H gap between the finest trajectories of two ladders."""
    a = limit_solution(op, x0, cfg, ladder_a, path).trajectory
    b = limit_solution(op, x0, cfg, ladder_b, path).trajectory
    return sup_gap(op, a, b)


def _steps_of(time: float, dt: float) -> int:
    steps = int(round(time / dt))
    if abs(time - steps * dt) > 1e-9 * max(1.0, time):
        raise ValueError(f"Time {time} is not a multiple of dt {dt}.")
    return steps


def semiflow_check(
    op: DriftOperator,
    x0: np.ndarray,
    s: float,
    t: float,
    cfg: SolverConfig,
    path: Optional[NoisePath] = None,
) -> float:
    """
    Restart gap ‖u(t+s)x₀ - u(t)(u(s)x₀)‖_H.

    The restarted run continues from u(s)x₀ with the shifted increments and the
    cumulative noise at s, so with identical step sequences the gap is zero.

    Raises
    ------
    ValueError
        If s or t is not a multiple of dt.
    """
    ks, kt = _steps_of(s, cfg.dt), _steps_of(t, cfg.dt)
    if ks + kt == 0:
        return 0.0
    path = path or zero_path(op, cfg.dt, ks + kt)
    full = solve_additive(op, x0, path, cfg.with_steps(ks + kt))
    if ks == 0:
        first_state = op.space.check_vector(x0)
        g0 = None
    else:
        first = solve_additive(op, x0, path, cfg.with_steps(ks))
        first_state = first.final
        g0 = path.cumulative()[ks]
    if kt == 0:
        restarted = first_state
    else:
        second = solve_additive(op, first_state, path.shift(ks), cfg.with_steps(kt), g0)
        restarted = second.final
    return op.space.norm_H(full.final - restarted)


def s_bound_constant(op: DriftOperator, traj: Trajectory, path: NoisePath) -> float:
    """
    Smallest C >= 0 with sup_k ‖X_k‖_S² <= e^{CT} (‖x₀‖_S² + C R).

    R = dt Σ_k ‖N_{t_k}‖²_{D(T^(3/2))} is the regularity integral of the path.

    Raises
    ------
    ValueError
        If x₀ and the path vanish in S while the trajectory does not, or if no
        constant is found within S_BOUND_MAX_DOUBLINGS doublings.
    """
    lam = op.space.eigenvalues[: path.n_modes]
    cum = path.cumulative_coefficients()[1 : traj.n_steps + 1]
    reg = float(path.dt * np.sum((1.0 + lam**3) * cum * cum))
    norms_s = traj.diagnostics[TrajCol.NORM_S].to_numpy()
    s0, top = norms_s[0] ** 2, float(np.max(norms_s**2))
    horizon = traj.times[-1] - traj.times[0]

    def excess(c: float) -> float:
        return math.exp(min(c * horizon, 700.0)) * (s0 + c * reg) - top

    if excess(0.0) >= 0:
        return 0.0
    if s0 + reg == 0:
        raise ValueError(
            f"No S-bound constant exists: x0 and the noise vanish in S but sup ‖X_k‖_S² = {top:.4g}."
        )
    hi = 1.0
    for _ in range(S_BOUND_MAX_DOUBLINGS):
        if excess(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise ValueError(f"S-bound constant exceeds {hi:.4g}; the trajectory grows faster than the bound allows.")
    constant = float(brentq(excess, 0.0, hi))
    logger.debug(f"S-bound constant C={constant:.4g} (R={reg:.4g})")
    return constant


def refinement_gaps(
    op: DriftOperator,
    x0: np.ndarray,
    path: NoisePath,
    cfg: SolverConfig,
    halvings: int = 3,
) -> List[float]:
    """
    Sup-H gaps between consecutive time resolutions on one ω.

    The finest level uses ``path``; coarser levels sum its increments, so every
    level sees the same noise. The first gap compares the coarsest pair.

    Returns
    -------
    List[float]
        ``halvings`` gaps, from coarse to fine.
    """
    trajectories = []
    for j in range(halvings, -1, -1):
        level_path = path.coarsen(2**j)
        level_cfg = replace(cfg, dt=level_path.dt, horizon=level_path.horizon)
        trajectories.append(solve_additive(op, x0, level_path, level_cfg))
    return [sup_gap(op, a, b, stride=2) for a, b in zip(trajectories, trajectories[1:])]
