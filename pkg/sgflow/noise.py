"""Seeded noise paths and multiplicative diffusion coefficients."""

import logging
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from sgflow.constants import REGULARITY_BOUND, Modulation, NoiseCol, NoiseKind, TripleMode
from sgflow.spectral import SpectralSpace

logger = logging.getLogger("Noise")


@dataclass(frozen=True)
class NoiseSpec:
    """
    Description of a noise law.

    Attributes
    ----------
    kind : NoiseKind
        Zero, TraceClassWiener or CompoundPoisson.
    sigma : float
        Wiener scale σ.
    rho : float
        Wiener spectral decay exponent ρ; mode k has amplitude σ λ_k^(-ρ).
    rate : float
        Poisson jumps per unit time.
    jump_modes : Tuple[int, ...]
        1-based eigenmodes that jumps act on.
    jump_scale : float
        Standard deviation of each jump coordinate.
    """

    kind: NoiseKind = NoiseKind.ZERO
    sigma: float = 0.0
    rho: float = 0.0
    rate: float = 0.0
    jump_modes: Tuple[int, ...] = (1,)
    jump_scale: float = 0.0

    def __post_init__(self) -> None:
        """Normalise field types."""
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        object.__setattr__(self, "jump_modes", tuple(int(m) for m in self.jump_modes))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a plain dictionary."""
        out = asdict(self)
        out["kind"] = self.kind.value
        out["jump_modes"] = list(self.jump_modes)
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NoiseSpec":
        """Create from a plain dictionary."""
        return cls(**data)

    def with_kind(self, kind: Union[NoiseKind, str]) -> "NoiseSpec":
        """Copy with another kind."""
        return replace(self, kind=NoiseKind(kind))


def wiener_amplitudes(
    space: SpectralSpace, sigma: float, rho: float, m: int
) -> np.ndarray:
    """Per-mode amplitudes σ λ_k^(-ρ) of the first m modes."""
    return sigma * space.eigenvalues[:m] ** (-rho)


def mode_basis(space: SpectralSpace, m: Optional[int] = None) -> np.ndarray:
    """Contiguous matrix of the first m eigenvectors."""
    m = space.n_modes if m is None else m
    if not 1 <= m <= space.n_modes:
        raise ValueError(f"m must be in [1, {space.n_modes}], got {m}.")
    return np.ascontiguousarray(space.eigenvectors[:, :m])


class NoisePath:
    """
    Pre-materialised noise increments ΔN_k on a fixed time grid.

    Increments are stored as spectral coefficients over the first m modes, so
    that every consumer (steppers, Picard sweeps, two-point couplings) sees
    the same ω. Grid increments are synthesised on demand with
    :meth:`increment`.

    Parameters
    ----------
    space : SpectralSpace
        The discrete triple.
    spec : NoiseSpec
        Law of the noise.
    seed : int
        Seed the path was drawn from.
    dt : float
        Time step.
    coefficients : np.ndarray
        Array of shape (n_steps, m) with the modal increments.
    standard : Optional[np.ndarray], optional
        Wiener increments ΔW_k (standard normals times sqrt(dt)) before scaling.
    jump_counts : Optional[np.ndarray], optional
        Number of Poisson jumps per step.

    Raises
    ------
    ValueError
        If dt is not positive or the coefficient array has the wrong shape.
    """

    def __init__(
        self,
        space: SpectralSpace,
        spec: NoiseSpec,
        seed: int,
        dt: float,
        coefficients: np.ndarray,
        standard: Optional[np.ndarray] = None,
        jump_counts: Optional[np.ndarray] = None,
    ) -> None:
        """Initialize the noise path."""
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}.")
        coefficients = np.ascontiguousarray(coefficients, dtype=float)
        if coefficients.ndim != 2 or not 1 <= coefficients.shape[1] <= space.n_modes:
            raise ValueError(
                f"coefficients must have shape (n_steps, m) with m <= {space.n_modes}, "
                f"got {coefficients.shape}."
            )
        self._space = space
        self._spec = spec
        self._seed = int(seed)
        self._dt = float(dt)
        self._coef = coefficients
        self._coef.setflags(write=False)
        self._standard = standard
        self._jump_counts = jump_counts
        self._basis = mode_basis(space, coefficients.shape[1])

    @property
    def space(self) -> SpectralSpace:
        """The discrete triple."""
        return self._space

    @property
    def spec(self) -> NoiseSpec:
        """Noise law."""
        return self._spec

    @property
    def kind(self) -> NoiseKind:
        """Noise kind."""
        return self._spec.kind

    @property
    def seed(self) -> int:
        """Seed of the draw."""
        return self._seed

    @property
    def dt(self) -> float:
        """Time step."""
        return self._dt

    @property
    def n_steps(self) -> int:
        """Number of increments."""
        return self._coef.shape[0]

    @property
    def n_modes(self) -> int:
        """Number of modes m carrying noise."""
        return self._coef.shape[1]

    @property
    def horizon(self) -> float:
        """Final time n_steps * dt."""
        return self.n_steps * self._dt

    @property
    def coefficients(self) -> np.ndarray:
        """Modal increments, shape (n_steps, m)."""
        return self._coef

    @property
    def standard(self) -> Optional[np.ndarray]:
        """Unscaled Wiener increments ΔW_k, if any."""
        return self._standard

    @property
    def jump_counts(self) -> Optional[np.ndarray]:
        """Poisson jump counts per step, if any."""
        return self._jump_counts

    @property
    def basis(self) -> np.ndarray:
        """Eigenvectors of the noisy modes, shape (N, m)."""
        return self._basis

    def __repr__(self) -> str:
        """Return a string representation of the path."""
        return (
            f"NoisePath(kind={self.kind.value}, seed={self._seed}, dt={self._dt}, "
            f"n_steps={self.n_steps}, n_modes={self.n_modes})"
        )

    def increment(self, k: int) -> np.ndarray:
        """Grid increment ΔN_k."""
        return self._basis @ self._coef[k]

    def increments(self) -> np.ndarray:
        """All grid increments, shape (n_steps, N)."""
        return np.array([self.increment(k) for k in range(self.n_steps)])

    def cumulative_coefficients(self) -> np.ndarray:
        """Modal coefficients of N_{t_k}, shape (n_steps + 1, m), starting at 0."""
        out = np.zeros((self.n_steps + 1, self.n_modes))
        np.cumsum(self._coef, axis=0, out=out[1:])
        return out

    def cumulative(self) -> np.ndarray:
        """Grid values of N_{t_k}, shape (n_steps + 1, N)."""
        return self.cumulative_coefficients() @ self._basis.T

    def _derived(
        self,
        coefficients: np.ndarray,
        standard: Optional[np.ndarray],
        jump_counts: Optional[np.ndarray],
        dt: Optional[float] = None,
    ) -> "NoisePath":
        return NoisePath(
            self._space,
            self._spec,
            self._seed,
            self._dt if dt is None else dt,
            coefficients,
            standard,
            jump_counts,
        )

    def project(self, m: int) -> "NoisePath":
        """
        Galerkin truncation P_m of the same ω.

        Raises
        ------
        ValueError
            If m is outside [1, n_modes].
        """
        if not 1 <= m <= self.n_modes:
            raise ValueError(f"m must be in [1, {self.n_modes}], got {m}.")
        std = None if self._standard is None else self._standard[:, :m]
        return self._derived(self._coef[:, :m], std, self._jump_counts)

    def shift(self, k: int) -> "NoisePath":
        """Increments from step k on, for restarting a run at t_k."""
        if not 0 <= k <= self.n_steps:
            raise ValueError(f"shift must be in [0, {self.n_steps}], got {k}.")
        std = None if self._standard is None else self._standard[k:]
        counts = None if self._jump_counts is None else self._jump_counts[k:]
        return self._derived(self._coef[k:], std, counts)

    def coarsen(self, factor: int) -> "NoisePath":
        """
        Sum consecutive increments to a path with step factor * dt.

        Raises
        ------
        ValueError
            If n_steps is not divisible by factor.
        """
        if factor < 1 or self.n_steps % factor:
            raise ValueError(
                f"Cannot coarsen {self.n_steps} steps by a factor of {factor}."
            )

        def fold(arr: Optional[np.ndarray]) -> Optional[np.ndarray]:
            if arr is None:
                return None
            return arr.reshape(self.n_steps // factor, factor, *arr.shape[1:]).sum(axis=1)

        return self._derived(
            fold(self._coef), fold(self._standard), fold(self._jump_counts), self._dt * factor
        )

    def to_frame(self) -> pd.DataFrame:
        """Long table with one row per (step, mode)."""
        n_steps, m = self._coef.shape
        steps = np.repeat(np.arange(n_steps), m)
        return pd.DataFrame(
            {
                NoiseCol.K: steps,
                NoiseCol.T: steps * self._dt,
                NoiseCol.MODE: np.tile(np.arange(1, m + 1), n_steps),
                NoiseCol.VALUE: self._coef.ravel(),
            }
        )

    def write_csv(self, path: str) -> None:
        """Dump the modal increments for replay."""
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Wrote {self.n_steps} noise increments to {path}")

    @classmethod
    def read_csv(
        cls,
        path: str,
        space: SpectralSpace,
        spec: Optional[NoiseSpec] = None,
        seed: int = 0,
        dt: Optional[float] = None,
    ) -> "NoisePath":
        """
        Load a path written by :meth:`write_csv`.

        Parameters
        ----------
        path : str
            CSV file.
        space : SpectralSpace
            The triple the path lives on.
        spec : Optional[NoiseSpec], optional
            Law to attach, by default an unnamed Wiener law. A Wiener law with
            σ > 0 also restores the standard increments ΔW_k = ΔN_k / (σ λ_k^(-ρ)),
            so the replay can drive a multiplicative run.
        seed : int, optional
            Seed to attach, by default 0.
        dt : Optional[float], optional
            Time step, by default inferred from the t_k column.

        Raises
        ------
        ValueError
            If the file lacks a column or dt cannot be inferred.
        """
        df = pd.read_csv(path)
        missing = [c for c in NoiseCol.cols if c not in df.columns]
        if missing:
            raise ValueError(f"Noise file {path} lacks columns {missing}.")
        table = df.pivot(index=NoiseCol.K, columns=NoiseCol.MODE, values=NoiseCol.VALUE)
        table = table.sort_index().sort_index(axis=1)
        if dt is None:
            later = df[df[NoiseCol.K] > 0]
            if later.empty:
                raise ValueError("Cannot infer dt from a single-step noise file.")
            row = later.iloc[0]
            dt = float(row[NoiseCol.T]) / float(row[NoiseCol.K])
        spec = spec or NoiseSpec(kind=NoiseKind.WIENER)
        coef = table.to_numpy()
        standard = None
        if spec.kind == NoiseKind.WIENER and spec.sigma > 0:
            standard = coef / wiener_amplitudes(space, spec.sigma, spec.rho, coef.shape[1])
        return cls(space, spec, seed, dt, coef, standard)


def sample_path(
    space: SpectralSpace,
    spec: NoiseSpec,
    seed: int,
    dt: float,
    n_steps: int,
    modes: Optional[int] = None,
) -> NoisePath:
    """
    Draw a reproducible noise path.

    Parameters
    ----------
    space : SpectralSpace
        The discrete triple.
    spec : NoiseSpec
        Noise law.
    seed : int
        64-bit seed; identical inputs give bit-identical increments.
    dt : float
        Time step.
    n_steps : int
        Number of increments.
    modes : Optional[int], optional
        Number of modes m carrying noise, by default all retained modes.

    Returns
    -------
    NoisePath
        The path. Wiener increments have per-mode variance dt σ² λ_k^(-2ρ);
        Poisson jumps act on ``spec.jump_modes`` only.

    Raises
    ------
    ValueError
        If dt is not positive, n_steps < 1 or a jump mode is out of range.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}.")
    if n_steps < 1:
        raise ValueError(f"n_steps must be positive, got {n_steps}.")
    m = space.n_modes if modes is None else int(modes)
    if not 1 <= m <= space.n_modes:
        raise ValueError(f"modes must be in [1, {space.n_modes}], got {m}.")
    rng = np.random.default_rng(seed)
    coef = np.zeros((n_steps, m))
    standard = None
    counts = None
    if spec.kind == NoiseKind.WIENER:
        standard = rng.standard_normal((n_steps, m)) * np.sqrt(dt)
        coef = wiener_amplitudes(space, spec.sigma, spec.rho, m) * standard
    elif spec.kind == NoiseKind.POISSON:
        idx = np.asarray(spec.jump_modes) - 1
        if np.any(idx < 0) or np.any(idx >= m):
            raise ValueError(f"jump_modes {spec.jump_modes} outside [1, {m}].")
        counts = rng.poisson(spec.rate * dt, n_steps)
        for k in np.nonzero(counts)[0]:
            jumps = rng.standard_normal((counts[k], len(idx))) * spec.jump_scale
            coef[k, idx] = jumps.sum(axis=0)
    logger.debug(f"Sampled {spec.kind.value} path, seed={seed}, steps={n_steps}")
    return NoisePath(space, spec, seed, dt, coef, standard, counts)


@dataclass
class RegularityReport:
    """Time-integrated D(T^(3/2)) norm of a cumulative noise path."""

    l2_T32_norm: float
    certifies_hyp_g: bool
    tail_share: float
    critical_rho: float


def regularity_report(path: NoisePath) -> RegularityReport:
    """
    Certify that the cumulative path lies in L²(0,T; D(T^(3/2))).

    Computes dt Σ_k ‖N_{t_k}‖²_{D(T^(3/2))}. A path is certified when the square
    root of that sum stays below REGULARITY_BOUND · sqrt(n_modes). Wiener paths
    also need the mode series Σ λ_k^(3-2ρ) to converge, i.e. ρ > 3/2 + dim/4.

    Parameters
    ----------
    path : NoisePath
        The path.

    Returns
    -------
    RegularityReport
        The norm, the certificate, the share of the norm carried by the upper
        half of the modes, and the critical exponent.
    """
    space = path.space
    lam = space.eigenvalues[: path.n_modes]
    cum = path.cumulative_coefficients()[1:]
    per_mode = path.dt * np.sum((1.0 + lam**3) * cum * cum, axis=0)
    total = float(np.sum(per_mode))
    half = path.n_modes // 2
    tail = float(np.sum(per_mode[half:]) / total) if total > 0 else 0.0
    critical = 1.5 + space.grid.dim / 4.0
    norm = float(np.sqrt(total))
    bound = REGULARITY_BOUND * np.sqrt(path.n_modes)
    certified = bool(np.isfinite(norm) and norm <= bound)
    if not certified:
        logger.warning(f"D(T^(3/2)) norm {norm:.4g} exceeds {bound:.4g}: noise is not regular enough")
    if path.kind == NoiseKind.WIENER and path.spec.rho <= critical:
        logger.warning(f"rho={path.spec.rho} <= {critical}: noise is not regular enough")
        certified = False
    return RegularityReport(norm, certified, tail, critical)


class DiffusionCoefficient:
    """
    Diagonal multiplicative coefficient B(x) = β(x) Σ_k b_k e_k ⊗ u_k.

    Parameters
    ----------
    space : SpectralSpace
        The discrete triple.
    sigma : float
        Scale σ of the amplitudes b_k = σ λ_k^(-ρ).
    rho : float
        Spectral decay exponent.
    modes : Optional[int], optional
        Galerkin mode count m, by default all modes.
    modulation : Modulation, optional
        State modulation β, by default Constant.
    a, b, clip : float, optional
        Parameters of AffineClipped, β(x) = min(max(a + b‖x‖_H, 0), clip).

    Notes
    -----
    Declared constants, with w_k = ‖e_k‖_H:

    - growth: ‖B(x)‖²_{L₂(U,H)} <= h with h = β_max² Σ b_k² w_k², C = 0.
    - Lipschitz: ‖B(x) - B(y)‖_{L₂(U,H)} <= L_β (Σ b_k² w_k²)^(1/2) ‖x - y‖_H.
    - S-growth: ‖B(x)‖²_{L₂(U,S)} <= β_max² Σ b_k² ‖e_k‖_S².
    """

    def __init__(
        self,
        space: SpectralSpace,
        sigma: float,
        rho: float,
        modes: Optional[int] = None,
        modulation: Union[Modulation, str] = Modulation.CONSTANT,
        a: float = 1.0,
        b: float = 0.0,
        clip: float = 1.0,
    ) -> None:
        """Initialize the coefficient."""
        self._space = space
        self._m = space.n_modes if modes is None else int(modes)
        self._sigma = float(sigma)
        self._rho = float(rho)
        self._amplitudes = wiener_amplitudes(space, sigma, rho, self._m)
        self._modulation = Modulation(modulation)
        self._a, self._b, self._clip = float(a), float(b), float(clip)
        if self._modulation == Modulation.AFFINE_CLIPPED and self._clip <= 0:
            raise ValueError(f"clip must be positive, got {clip}.")
        lam = space.eigenvalues[: self._m]
        exp_s = 1.0 if space.triple_mode == TripleMode.H1_OVER_L2 else 0.0
        self._h_weights = lam ** (exp_s - 1.0)
        self._s_weights = lam**exp_s

    @property
    def amplitudes(self) -> np.ndarray:
        """b_k."""
        return self._amplitudes

    @property
    def modes(self) -> int:
        """Galerkin mode count m."""
        return self._m

    @property
    def sigma(self) -> float:
        """Scale σ."""
        return self._sigma

    @property
    def rho(self) -> float:
        """Decay exponent ρ."""
        return self._rho

    @property
    def modulation(self) -> Modulation:
        """State modulation."""
        return self._modulation

    def __repr__(self) -> str:
        """Return a string representation of the coefficient."""
        return (
            f"DiffusionCoefficient(sigma={self._sigma}, rho={self._rho}, "
            f"modes={self._m}, modulation={self._modulation.value})"
        )

    def beta(self, x: np.ndarray) -> float:
        """State modulation β(x)."""
        if self._modulation == Modulation.CONSTANT:
            return 1.0
        norm = self._space.norm_H(x)
        if self._modulation == Modulation.SATURATING:
            return 1.0 / (1.0 + norm)
        return float(min(max(self._a + self._b * norm, 0.0), self._clip))

    @property
    def lipschitz_beta(self) -> float:
        """Declared L_β."""
        if self._modulation == Modulation.CONSTANT:
            return 0.0
        if self._modulation == Modulation.SATURATING:
            return 1.0
        return abs(self._b)

    @property
    def beta_max(self) -> float:
        """Declared sup β."""
        if self._modulation == Modulation.AFFINE_CLIPPED:
            return self._clip
        return 1.0

    @property
    def hs_sum(self) -> float:
        """Σ b_k² ‖e_k‖_H²."""
        return float(np.sum(self._amplitudes**2 * self._h_weights))

    @property
    def growth_constants(self) -> Tuple[float, float]:
        """Declared (C, h) of the growth bound."""
        return 0.0, self.beta_max**2 * self.hs_sum

    @property
    def lipschitz_constant(self) -> float:
        """Declared Lipschitz constant of B in L₂(U, H)."""
        return self.lipschitz_beta * np.sqrt(self.hs_sum)

    @property
    def s_growth_constant(self) -> float:
        """Declared bound of ‖B(x)‖²_{L₂(U,S)}."""
        return float(self.beta_max**2 * np.sum(self._amplitudes**2 * self._s_weights))

    def default_window(self, cap: float = 0.1) -> float:
        """Picard window min(cap, 1 / (4 L_β² Σ b_k²))."""
        denom = 4.0 * self.lipschitz_beta**2 * float(np.sum(self._amplitudes**2))
        return cap if denom == 0 else min(cap, 1.0 / denom)

    def hs_norm_sq(self, x: np.ndarray) -> float:
        """‖B(x)‖²_{L₂(U,H)}."""
        return self.beta(x) ** 2 * self.hs_sum

    def increment(
        self, x: np.ndarray, standard: np.ndarray, basis: np.ndarray
    ) -> np.ndarray:
        """Grid increment basis @ (β(x) b ⊙ ΔW)."""
        return basis @ (self.beta(x) * self._amplitudes * standard)

    def verify_hypotheses(
        self, samples: np.ndarray, tol: float = 1e-12
    ) -> Dict[str, bool]:
        """
        Check the declared constants on sample pairs.

        Parameters
        ----------
        samples : np.ndarray
            Array of shape (n, N); consecutive rows form pairs.
        tol : float, optional
            Absolute slack, by default 1e-12.

        Returns
        -------
        Dict[str, bool]
            Keys ``growth``, ``lipschitz``, ``s_growth``.
        """
        _, h = self.growth_constants
        s_bound = self.s_growth_constant
        lip = self.lipschitz_constant
        growth = lipschitz = s_growth = True
        s_sum = float(np.sum(self._amplitudes**2 * self._s_weights))
        for i, x in enumerate(samples):
            growth &= self.hs_norm_sq(x) <= h + tol
            s_growth &= self.beta(x) ** 2 * s_sum <= s_bound + tol
            if i + 1 < len(samples):
                y = samples[i + 1]
                gap = abs(self.beta(x) - self.beta(y)) * np.sqrt(self.hs_sum)
                lipschitz &= gap <= lip * self._space.norm_H(x - y) + tol
        return {"growth": bool(growth), "lipschitz": bool(lipschitz), "s_growth": bool(s_growth)}


def multiplicative_increment(
    coeff: DiffusionCoefficient,
    x: np.ndarray,
    standard: np.ndarray,
    basis: np.ndarray,
) -> np.ndarray:
    """
    Increment Σ_k b_k β(x) ΔW_k e_k of the frozen multiplicative noise.

    Parameters
    ----------
    coeff : DiffusionCoefficient
        The coefficient.
    x : np.ndarray
        State the coefficient is frozen at.
    standard : np.ndarray
        ΔW_k, standard normals times sqrt(dt), one per mode.
    basis : np.ndarray
        Eigenvectors of the noisy modes, usually ``NoisePath.basis``.

    Returns
    -------
    np.ndarray
        Grid increment.
    """
    return coeff.increment(x, standard, basis)
