"""Scalar and radial monotone graphs with potentials and pointwise resolvents."""

import logging
import math
from typing import Optional, Tuple, Union

import numba
import numpy as np
from scipy.optimize import brentq

from sgflow.constants import (
    BISECTION_MAX_ITER,
    BISECTION_TOL,
    GRAPH_CODE,
    GraphKind,
)

logger = logging.getLogger("Graphs")

ArrayLike = Union[float, np.ndarray]

_TINY = 1e-12


@numba.jit(nopython=True, cache=False)
def _branch_value(code: int, p: float, delta: float, r: float) -> float:
    """Minimal-section branch of one graph at one point."""
    if code == 0:
        if delta > 0.0:
            return (r * r + delta * delta) ** ((p - 2.0) / 2.0) * r
        if r == 0.0:
            return 0.0
        mag = abs(r) ** (p - 1.0)
        return mag if r > 0.0 else -mag
    if code == 1:
        val = math.log1p(abs(r))
        return val if r >= 0.0 else -val
    if code == 2:
        return math.atan(r)
    if code == 3:
        return r / math.sqrt(1.0 + r * r)
    if abs(r) <= 1.0:
        return r
    return 1.0 if r > 0.0 else -1.0


@numba.jit(nopython=True, cache=False)
def _resolvent_kernel(
    code: int,
    p: float,
    delta: float,
    lam: float,
    f: np.ndarray,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    """Solve r + lam * branch(r) = f_i by bisection on [min(0, f_i), max(0, f_i)]."""
    out = np.empty_like(f)
    for i in range(f.shape[0]):
        fi = f[i]
        lo = min(0.0, fi)
        hi = max(0.0, fi)
        for _ in range(max_iter):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if mid + lam * _branch_value(code, p, delta, mid) - fi > 0.0:
                hi = mid
            else:
                lo = mid
        out[i] = 0.5 * (lo + hi)
    return out


def _as_output(values: np.ndarray, like: ArrayLike) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(values)
    return values


class ScalarGraph:
    """
    Odd monotone graph Φ̃ = Ψ̃' on the real line.

    Parameters
    ----------
    kind : GraphKind
        One of Power, LogPlasma, Arctan, MinimalSurface, PlasticShear.
    p : float, optional
        Exponent of the Power kind, in [1, 2], by default 2. Ignored otherwise.
    delta : float, optional
        Default smoothing parameter, by default 0. Only the Power kind with
        p < 2 is smoothed; the other kinds are single valued and 1-Lipschitz.

    Raises
    ------
    ValueError
        If p is outside [1, 2] or delta is negative.

    Notes
    -----
    Potentials, with Ψ̃(0) = 0:

    - Power: |r|^p / p, smoothed to ((r²+δ²)^(p/2) - δ^p) / p.
    - LogPlasma: (|r|+1) log(|r|+1) - |r|.
    - Arctan: r arctan(r) - log(1+r²) / 2.
    - MinimalSurface: sqrt(1+r²) - 1.
    - PlasticShear: r²/2 for |r| <= 1, |r| - 1/2 otherwise.
    """

    def __init__(
        self,
        kind: Union[GraphKind, str],
        p: float = 2.0,
        delta: float = 0.0,
    ) -> None:
        """Initialize the graph."""
        self._kind = GraphKind(kind)
        if self._kind == GraphKind.POWER and not 1.0 <= p <= 2.0:
            raise ValueError(f"Power exponent must lie in [1, 2], got {p}.")
        if delta < 0:
            raise ValueError(f"delta must be nonnegative, got {delta}.")
        self._p = float(p) if self._kind == GraphKind.POWER else 2.0
        self._delta = float(delta)
        self._code = GRAPH_CODE[self._kind]

    @property
    def kind(self) -> GraphKind:
        """Graph kind."""
        return self._kind

    @property
    def p(self) -> float:
        """Power exponent (2 for non-power kinds)."""
        return self._p

    @property
    def delta(self) -> float:
        """Default smoothing parameter."""
        return self._delta

    @property
    def is_singular(self) -> bool:
        """Whether the δ=0 branch is multi-valued or has unbounded slope at 0."""
        return self._kind == GraphKind.POWER and self._p < 2.0

    def __repr__(self) -> str:
        """Return a string representation of the graph."""
        if self._kind == GraphKind.POWER:
            return f"ScalarGraph(kind=Power, p={self._p}, delta={self._delta})"
        return f"ScalarGraph(kind={self._kind.value})"

    def __eq__(self, other: object) -> bool:
        """Graphs are equal when kind, p and delta agree."""
        if not isinstance(other, ScalarGraph):
            return NotImplemented
        return (self.kind, self.p, self.delta) == (other.kind, other.p, other.delta)

    def with_delta(self, delta: float) -> "ScalarGraph":
        """Return a copy with another smoothing parameter."""
        return ScalarGraph(self._kind, self._p, delta)

    def _delta_or_default(self, delta: Optional[float]) -> float:
        if delta is not None and delta < 0:
            raise ValueError(f"delta must be nonnegative, got {delta}.")
        if not self.is_singular:
            return 0.0
        return self._delta if delta is None else float(delta)

    def potential(self, r: ArrayLike, delta: Optional[float] = None) -> ArrayLike:
        """
        Evaluate the potential Ψ̃.

        Parameters
        ----------
        r : ArrayLike
            Point(s).
        delta : Optional[float], optional
            Smoothing parameter, by default the graph's own.

        Returns
        -------
        ArrayLike
            Ψ̃(r), even in r.
        """
        d = self._delta_or_default(delta)
        a = np.abs(np.asarray(r, dtype=float))
        if self._kind == GraphKind.POWER:
            p = self._p
            if d > 0:
                out = ((a * a + d * d) ** (p / 2.0) - d**p) / p
            else:
                out = a**p / p
        elif self._kind == GraphKind.LOG_PLASMA:
            out = (a + 1.0) * np.log1p(a) - a
        elif self._kind == GraphKind.ARCTAN:
            out = a * np.arctan(a) - 0.5 * np.log1p(a * a)
        elif self._kind == GraphKind.MINIMAL_SURFACE:
            out = np.sqrt(1.0 + a * a) - 1.0
        else:
            out = np.where(a <= 1.0, 0.5 * a * a, a - 0.5)
        return _as_output(out, r)

    def branch(self, r: ArrayLike, delta: Optional[float] = None) -> ArrayLike:
        """
        Evaluate the minimal-section branch Φ̃_δ.

        For δ = 0 and the multi-valued Power(p=1) graph the value at r = 0 is 0,
        the element of least magnitude of Sgn(0) = [-1, 1].
        """
        d = self._delta_or_default(delta)
        x = np.asarray(r, dtype=float)
        if self._kind == GraphKind.POWER:
            p = self._p
            if d > 0:
                out = (x * x + d * d) ** ((p - 2.0) / 2.0) * x
            else:
                out = np.sign(x) * np.abs(x) ** (p - 1.0)
                out = np.where(x == 0.0, 0.0, out)
        elif self._kind == GraphKind.LOG_PLASMA:
            out = np.sign(x) * np.log1p(np.abs(x))
        elif self._kind == GraphKind.ARCTAN:
            out = np.arctan(x)
        elif self._kind == GraphKind.MINIMAL_SURFACE:
            out = x / np.sqrt(1.0 + x * x)
        else:
            out = np.clip(x, -1.0, 1.0)
        return _as_output(out, r)

    def derivative(self, r: ArrayLike, delta: Optional[float] = None) -> ArrayLike:
        """
        Slope of the branch, used in Newton Jacobians.

        PlasticShear returns 1 on |r| <= 1 and 0 outside (a generalised
        derivative). Power(p<2) with δ = 0 returns inf at r = 0.
        """
        d = self._delta_or_default(delta)
        x = np.asarray(r, dtype=float)
        if self._kind == GraphKind.POWER:
            p = self._p
            if p == 2.0:
                out = np.ones_like(x)
            elif d > 0:
                s = x * x + d * d
                out = s ** ((p - 4.0) / 2.0) * ((p - 1.0) * x * x + d * d)
            else:
                with np.errstate(divide="ignore"):
                    out = (p - 1.0) * np.abs(x) ** (p - 2.0)
                out = np.where(x == 0.0, np.inf, out)
        elif self._kind == GraphKind.LOG_PLASMA:
            out = 1.0 / (1.0 + np.abs(x))
        elif self._kind == GraphKind.ARCTAN:
            out = 1.0 / (1.0 + x * x)
        elif self._kind == GraphKind.MINIMAL_SURFACE:
            out = (1.0 + x * x) ** -1.5
        else:
            out = np.where(np.abs(x) <= 1.0, 1.0, 0.0)
        return _as_output(out, r)

    def lipschitz_constant(self, delta: Optional[float] = None) -> float:
        """
        Lipschitz constant of Φ̃_δ.

        max(1, δ^(p-2)) for Power, 1 for the other kinds; inf for the
        unsmoothed singular power graph.
        """
        d = self._delta_or_default(delta)
        if self.is_singular:
            return math.inf if d == 0 else max(1.0, d ** (self._p - 2.0))
        return 1.0

    def scalar_resolvent(
        self, lam: float, f: ArrayLike, delta: Optional[float] = None
    ) -> ArrayLike:
        """
        Pointwise resolvent: the unique r with r + λ Φ̃_δ(r) ∋ f.

        Parameters
        ----------
        lam : float
            Step λ >= 0.
        f : ArrayLike
            Right-hand side(s).
        delta : Optional[float], optional
            Smoothing parameter, by default the graph's own.

        Returns
        -------
        ArrayLike
            The resolvent, 1-Lipschitz in f.

        Raises
        ------
        ValueError
            If lam is negative.

        Examples
        --------
        >>> ScalarGraph("Power", p=1.0).scalar_resolvent(0.5, 1.0)
        0.5
        """
        if lam < 0:
            raise ValueError(f"lam must be nonnegative, got {lam}.")
        d = self._delta_or_default(delta)
        x = np.asarray(f, dtype=float)
        if lam == 0:
            return _as_output(x.copy(), f)
        if self._kind == GraphKind.POWER and self._p == 1.0 and d == 0:
            # soft threshold
            out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
        elif self._kind == GraphKind.POWER and self._p == 2.0:
            out = x / (1.0 + lam)
        else:
            flat = np.ascontiguousarray(np.atleast_1d(x).ravel())
            out = _resolvent_kernel(
                self._code,
                self._p,
                d,
                float(lam),
                flat,
                BISECTION_TOL,
                BISECTION_MAX_ITER,
            ).reshape(x.shape)
        return _as_output(out, f)

    def convexity_defect(self, r: np.ndarray, delta: Optional[float] = None) -> float:
        """
        Smallest second difference of Ψ̃ on a sorted sample.

        A nonnegative value (up to roundoff) certifies convexity on the sample.
        """
        r = np.sort(np.asarray(r, dtype=float))
        psi = np.asarray(self.potential(r, delta))
        left = (psi[1:-1] - psi[:-2]) / (r[1:-1] - r[:-2])
        right = (psi[2:] - psi[1:-1]) / (r[2:] - r[1:-1])
        return float(np.min(right - left))


class VectorGraph:
    """
    Radial extension Φ(x) = Φ̃(|x|) x / |x| of a scalar graph to R^dim.

    Vectors are passed component-stacked: an array of shape (dim, m) holds m
    cells. At x = 0 the minimal section 0 is returned.

    Parameters
    ----------
    base : ScalarGraph
        The scalar profile.
    dim : int
        Dimension of the vectors.
    """

    def __init__(self, base: ScalarGraph, dim: int) -> None:
        """Initialize the radial graph."""
        self._base = base
        self._dim = int(dim)

    @property
    def base(self) -> ScalarGraph:
        """Scalar profile."""
        return self._base

    @property
    def dim(self) -> int:
        """Vector dimension."""
        return self._dim

    def __repr__(self) -> str:
        """Return a string representation of the radial graph."""
        return f"VectorGraph(base={self._base!r}, dim={self._dim})"

    def _components(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(self._dim, -1)
        if x.shape[0] != self._dim:
            raise ValueError(
                f"Expected {self._dim} stacked components, got shape {x.shape}."
            )
        return x

    def magnitude(self, x: np.ndarray) -> np.ndarray:
        """Euclidean length per cell."""
        x = self._components(x)
        return np.sqrt(np.sum(x * x, axis=0))

    def potential(self, x: np.ndarray, delta: Optional[float] = None) -> np.ndarray:
        """Ψ̃(|x|) per cell."""
        return np.asarray(self._base.potential(self.magnitude(x), delta))

    def radial_coefficients(
        self, r: np.ndarray, delta: Optional[float] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Coefficients of Φ and DΦ in terms of the radius.

        Returns
        -------
        Tuple[np.ndarray, np.ndarray]
            ``a(r) = Φ̃(r)/r`` and ``c(r) = (Φ̃'(r) - a(r))/r²`` so that
            ``Φ(x) = a x`` and ``DΦ(x) = a I + c x xᵀ``. At r = 0 the limits
            ``a = Φ̃'(0)`` and ``c = 0`` are used.
        """
        base = self._base
        r = np.asarray(r, dtype=float)
        d = base._delta_or_default(delta)
        if base.kind == GraphKind.POWER and base.p == 2.0:
            return np.ones_like(r), np.zeros_like(r)
        if base.kind == GraphKind.POWER and d > 0:
            p = base.p
            s = r * r + d * d
            a = s ** ((p - 2.0) / 2.0)
            c = (p - 2.0) * s ** ((p - 4.0) / 2.0)
            return a, c
        small = r <= _TINY
        safe = np.where(small, 1.0, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.asarray(base.branch(safe, d)) / safe
            c = (np.asarray(base.derivative(safe, d)) - a) / (safe * safe)
        a = np.where(small, np.asarray(base.derivative(np.zeros_like(r), d)), a)
        c = np.where(small, 0.0, c)
        return a, c

    def value(self, x: np.ndarray, delta: Optional[float] = None) -> np.ndarray:
        """Φ_δ(x) per cell, same stacked shape as x."""
        x = self._components(x)
        r = self.magnitude(x)
        phi = np.asarray(self._base.branch(r, delta))
        scale = np.divide(phi, r, out=np.zeros_like(r), where=r > 0)
        return x * scale

    def resolvent(
        self, lam: float, y: np.ndarray, delta: Optional[float] = None
    ) -> np.ndarray:
        """Radial resolvent ρ(|y|) y / |y| with ρ the scalar resolvent."""
        y = self._components(y)
        r = self.magnitude(y)
        rho = np.asarray(self._base.scalar_resolvent(lam, r, delta))
        scale = np.divide(rho, r, out=np.zeros_like(r), where=r > 0)
        return y * scale


def theta(r: ArrayLike) -> ArrayLike:
    """Plasma Lyapunov profile θ(r) = |r| log(|r| + 1)."""
    a = np.abs(np.asarray(r, dtype=float))
    return _as_output(a * np.log1p(a), r)


def theta_prime(s: float) -> float:
    """θ'(s) for s >= 0."""
    return math.log1p(s) + s / (1.0 + s)


def theta_conjugate(r: ArrayLike) -> ArrayLike:
    """
    Legendre conjugate θ*(r) = sup_s (|r| s - θ(s)).

    The supremum is attained where θ'(s) = |r|; that root is bracketed by
    [0, exp(|r|)] because θ'(s) >= log(1 + s).
    """
    a = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
    out = np.zeros_like(a)
    for i, ri in enumerate(a):
        if ri == 0:
            continue
        s = brentq(lambda x: theta_prime(x) - ri, 0.0, math.exp(ri), xtol=1e-14)
        out[i] = ri * s - s * math.log1p(s)
    if np.ndim(r) == 0:
        return float(out[0])
    return out.reshape(np.shape(r))


def delta2_violation(r: ArrayLike) -> Optional[float]:
    """First sampled r with θ(2r) > 4θ(r), or None."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    lhs = np.asarray(theta(2.0 * r))
    rhs = 4.0 * np.asarray(theta(r))
    bad = np.nonzero(lhs > rhs * (1.0 + 1e-14))[0]
    if len(bad) == 0:
        return None
    return float(r[bad[0]])


def delta2_check(r: ArrayLike) -> bool:
    """
    Check the Δ₂ condition θ(2r) <= 4θ(r) on a sample.

    Parameters
    ----------
    r : ArrayLike
        Sample points.

    Returns
    -------
    bool
        True if no sampled point violates the inequality. The first violating
        point is logged.
    """
    bad = delta2_violation(r)
    if bad is not None:
        logger.warning(f"Delta2 condition fails at r={bad:.6g}")
        return False
    return True
