"""Grid realisations of subgradient drifts and their global resolvents."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from sgflow.constants import (
    ARMIJO,
    DELTA_LADDER,
    FORM_TRIPLE,
    MAX_HALVINGS,
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    Form,
    GraphKind,
)
from sgflow.graphs import ScalarGraph, VectorGraph, theta
from sgflow.spectral import SpectralSpace

logger = logging.getLogger("Drift")


class NonConvergence(RuntimeError):
    """
    Newton with δ-continuation failed to reach the residual tolerance.

    Parameters
    ----------
    residual : float
        Last H-norm of the residual.
    iterations : int
        Newton iterations spent.
    step : Optional[int], optional
        Time step index, set by the steppers.
    """

    def __init__(
        self, residual: float, iterations: int, step: Optional[int] = None
    ) -> None:
        """Initialize the error."""
        self.residual = residual
        self.iterations = iterations
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"Newton did not converge{where}: residual={residual:.3e} "
            f"after {iterations} iterations."
        )


@dataclass(frozen=True)
class NewtonSettings:
    """Parameters of the damped Newton solver."""

    tol: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER
    armijo: float = ARMIJO
    delta_ladder: Tuple[float, ...] = DELTA_LADDER
    max_halvings: int = MAX_HALVINGS


@dataclass
class ResolventResult:
    """Solution of one resolvent problem."""

    u: np.ndarray
    iterations: int
    residual: float
    delta: float


@dataclass
class AuditReport:
    """
    Empirical constants of the drift hypotheses on a finite sample.

    Attributes
    ----------
    linear_growth : float
        max ‖η‖_{S*} / (1 + ‖u‖_S).
    weak_coercivity : float
        min over samples and n of ⟨η, T_n u⟩.
    dual_surplus : float
        min over samples of 2⟨η, u⟩ - c‖η‖_{S*} + C.
    violations : List[str]
        Names of the hypotheses that failed.
    """

    n_samples: int
    linear_growth: float
    weak_coercivity: float
    dual_surplus: float
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Whether no hypothesis was violated."""
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        """Convert the report to a dictionary."""
        return {
            "n_samples": self.n_samples,
            "linear_growth": self.linear_growth,
            "weak_coercivity": self.weak_coercivity,
            "dual_surplus": self.dual_surplus,
            "violations": list(self.violations),
        }


class DriftOperator:
    """
    Discrete subgradient drift A = ∂φ on a spectral space.

    DivergenceForm realises A(u) = -div_h Φ(∇_h u) = Gᵀ Φ(G u) with forward
    differences G, paired in the triple (H¹₀, L², H⁻¹). DiffusionForm realises
    A(u) = -Δ_h Φ(u) = T Φ(u), paired in (L², H⁻¹, H⁻²).

    Parameters
    ----------
    space : SpectralSpace
        The discrete triple.
    graph : ScalarGraph
        Nonlinearity. DivergenceForm applies it radially to gradients.
    form : Form
        DivergenceForm or DiffusionForm.
    delta : float, optional
        Smoothing parameter, by default 0. With δ = 0 and a singular power graph
        the resolvent runs the δ-continuation ladder.
    newton : Optional[NewtonSettings], optional
        Newton parameters, by default the package defaults.

    Raises
    ------
    ValueError
        If the form does not match the triple mode of the space.
    """

    def __init__(
        self,
        space: SpectralSpace,
        graph: ScalarGraph,
        form: Union[Form, str],
        delta: float = 0.0,
        newton: Optional[NewtonSettings] = None,
    ) -> None:
        """Initialize the drift operator."""
        self._space = space
        self._graph = graph
        self._form = Form(form)
        if FORM_TRIPLE[self._form] != space.triple_mode:
            raise ValueError(
                f"{self._form.value} requires triple mode "
                f"{FORM_TRIPLE[self._form].value}, got {space.triple_mode.value}."
            )
        if delta < 0:
            raise ValueError(f"delta must be nonnegative, got {delta}.")
        self._delta = float(delta)
        self._newton_settings = newton or NewtonSettings()
        self._vector = VectorGraph(graph, space.grid.dim)
        self._identity = sparse.identity(space.size, format="csr")

    @property
    def space(self) -> SpectralSpace:
        """The discrete triple."""
        return self._space

    @property
    def graph(self) -> ScalarGraph:
        """Scalar nonlinearity."""
        return self._graph

    @property
    def vector_graph(self) -> VectorGraph:
        """Radial extension used by DivergenceForm."""
        return self._vector

    @property
    def form(self) -> Form:
        """Grid realisation."""
        return self._form

    @property
    def delta(self) -> float:
        """Smoothing parameter."""
        return self._delta

    @property
    def newton(self) -> NewtonSettings:
        """Newton parameters."""
        return self._newton_settings

    def __repr__(self) -> str:
        """Return a string representation of the operator."""
        return (
            f"DriftOperator(form={self._form.value}, graph={self._graph!r}, "
            f"delta={self._delta}, space={self._space!r})"
        )

    def with_delta(self, delta: float) -> "DriftOperator":
        """Return the same operator with another smoothing parameter."""
        return DriftOperator(self._space, self._graph, self._form, delta, self._newton_settings)

    def to_dict(self) -> Dict[str, Any]:
        """Describe the operator for run manifests."""
        return {
            "form": self._form.value,
            "graph": self._graph.kind.value,
            "p": self._graph.p,
            "delta": self._delta,
            "newton_tol": self._newton_settings.tol,
        }

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Forward-difference gradient, shape (dim, n_cells)."""
        u = self._space.check_vector(u)
        return (self._space.gradient @ u).reshape(self._space.grid.dim, -1)

    def energy_phi(self, u: np.ndarray, delta: float = 0.0) -> float:
        """
        Discrete energy φ(u).

        Parameters
        ----------
        u : np.ndarray
            Grid vector.
        delta : float, optional
            Smoothing of the potential, by default 0 (the unsmoothed energy).

        Returns
        -------
        float
            h^dim Σ Ψ̃(|∇_h u|) over cells (DivergenceForm) or h^dim Σ Ψ̃(u_j)
            over nodes (DiffusionForm).
        """
        u = self._space.check_vector(u)
        weight = self._space.grid.cell_weight
        if self._form == Form.DIVERGENCE:
            vals = self._vector.potential(self.gradient(u), delta)
        else:
            vals = np.asarray(self._graph.potential(u, delta))
        return float(weight * np.sum(vals))

    def lyapunov_theta(self, u: np.ndarray) -> float:
        """
        Lyapunov functional Θ.

        Σ h^dim θ(u_j) with θ(r) = |r| log(|r|+1) for LogPlasma, φ - φ(0) otherwise.
        """
        if self._graph.kind == GraphKind.LOG_PLASMA:
            u = self._space.check_vector(u)
            return float(self._space.grid.cell_weight * np.sum(theta(u)))
        return self.energy_phi(u)

    def _selection(self, u: np.ndarray, delta: float) -> np.ndarray:
        if self._form == Form.DIVERGENCE:
            flux = self._vector.value(self.gradient(u), delta)
            return self._space.gradient.T @ flux.ravel()
        return self._space.laplacian @ np.asarray(self._graph.branch(u, delta))

    def apply_selection(
        self, u: np.ndarray, delta: Optional[float] = None
    ) -> np.ndarray:
        """
        Evaluate η = A_δ(u) as an S*-representative.

        With δ = 0 the minimal section is used where the graph is multi-valued.

        Parameters
        ----------
        u : np.ndarray
            Grid vector.
        delta : Optional[float], optional
            Smoothing, by default the operator's own.

        Returns
        -------
        np.ndarray
            η, satisfying ⟨η, w⟩ = h^dim Σ ⟨Φ_δ(∇_h u), ∇_h w⟩ in DivergenceForm.
        """
        u = self._space.check_vector(u)
        return self._selection(u, self._delta if delta is None else delta)

    def _residual(
        self,
        u: np.ndarray,
        f: np.ndarray,
        lam: float,
        eps: float,
        g: np.ndarray,
        delta: float,
    ) -> np.ndarray:
        res = u - f + lam * self._selection(u, delta)
        if eps > 0:
            res = res + lam * eps * (self._space.laplacian @ (u - g))
        return res

    def _objective(
        self,
        u: np.ndarray,
        f: np.ndarray,
        lam: float,
        eps: float,
        g: np.ndarray,
        delta: float,
    ) -> float:
        """Convex functional whose minimiser is the resolvent."""
        space = self._space
        val = 0.5 * space.norm_H(u - f) ** 2 + lam * self.energy_phi(u, delta)
        if eps > 0:
            val += 0.5 * lam * eps * space.norm_S(u - g) ** 2
        return val

    def _jacobian(
        self, u: np.ndarray, lam: float, eps: float, delta: float
    ) -> sparse.csc_matrix:
        space = self._space
        if self._form == Form.DIVERGENCE:
            grad = self.gradient(u)
            a, c = self._vector.radial_coefficients(
                self._vector.magnitude(grad), delta
            )
            if space.grid.dim == 1:
                block = sparse.diags(a + c * grad[0] ** 2)
            else:
                gx, gy = grad
                off = sparse.diags(c * gx * gy)
                block = sparse.bmat(
                    [
                        [sparse.diags(a + c * gx * gx), off],
                        [off, sparse.diags(a + c * gy * gy)],
                    ]
                )
            core = space.gradient.T @ block @ space.gradient
        else:
            slope = np.asarray(self._graph.derivative(u, delta))
            core = space.laplacian @ sparse.diags(slope)
        jac = self._identity + lam * core
        if eps > 0:
            jac = jac + lam * eps * space.laplacian
        return sparse.csc_matrix(jac)

    def _newton(
        self,
        lam: float,
        f: np.ndarray,
        eps: float,
        g: np.ndarray,
        delta: float,
        u0: np.ndarray,
    ) -> Tuple[np.ndarray, int, float]:
        """Damped Newton at fixed δ; raises NonConvergence."""
        space = self._space
        settings = self._newton_settings
        target = settings.tol * max(1.0, space.norm_H(f))
        u = u0.copy()
        res = self._residual(u, f, lam, eps, g, delta)
        rnorm = space.norm_H(res)
        it = 0
        while rnorm > target:
            if it >= settings.max_iter:
                raise NonConvergence(rnorm, it)
            step = spsolve(self._jacobian(u, lam, eps, delta), -res)
            if not np.all(np.isfinite(step)):
                raise NonConvergence(rnorm, it)
            slope = space.inner_H(res, step)
            obj0 = None
            t = 1.0
            while True:
                trial = u + t * step
                tres = self._residual(trial, f, lam, eps, g, delta)
                tnorm = space.norm_H(tres)
                if tnorm <= (1.0 - settings.armijo * t) * rnorm:
                    break
                if obj0 is None:
                    obj0 = self._objective(u, f, lam, eps, g, delta)
                obj = self._objective(trial, f, lam, eps, g, delta)
                if obj <= obj0 + settings.armijo * t * slope:
                    break
                t *= 0.5
                if t < 1e-10:
                    logger.debug(f"Line search stalled at residual {rnorm:.3e}")
                    raise NonConvergence(rnorm, it + 1)
            u, res, rnorm = trial, tres, tnorm
            it += 1
        return u, it, rnorm

    def _solve_level(
        self,
        lam: float,
        f: np.ndarray,
        eps: float,
        g: np.ndarray,
        target: float,
        u: np.ndarray,
        previous: Optional[float],
    ) -> Tuple[np.ndarray, int, float]:
        try:
            return self._newton(lam, f, eps, g, target, u)
        except NonConvergence as err:
            if not self._graph.is_singular:
                raise
            logger.debug(f"Retrying delta={target:g} by halving: {err}")
        settings = self._newton_settings
        d = previous if previous is not None else target * 2.0**settings.max_halvings
        total = 0
        for _ in range(settings.max_halvings):
            d = max(0.5 * d, target)
            u, iters, rnorm = self._newton(lam, f, eps, g, d, u)
            total += iters
            if d == target:
                return u, total, rnorm
        u, iters, rnorm = self._newton(lam, f, eps, g, target, u)
        return u, total + iters, rnorm

    def solve(
        self,
        lam: float,
        f: np.ndarray,
        eps: float = 0.0,
        g: Optional[np.ndarray] = None,
        u0: Optional[np.ndarray] = None,
    ) -> ResolventResult:
        """
        Solve u + λA_δ(u) + λε T(u - g) = f.

        Parameters
        ----------
        lam : float
            Step λ >= 0.
        f : np.ndarray
            Right-hand side.
        eps : float, optional
            Viscosity ε >= 0, by default 0.
        g : Optional[np.ndarray], optional
            Viscosity anchor, by default 0.
        u0 : Optional[np.ndarray], optional
            Newton starting point, by default f.

        Returns
        -------
        ResolventResult
            Solution, Newton iterations, final residual and the δ it was solved at.

        Raises
        ------
        ValueError
            If lam or eps is negative or a vector has the wrong dimension.
        NonConvergence
            If Newton fails after δ-halving.
        """
        space = self._space
        if lam < 0:
            raise ValueError(f"lam must be nonnegative, got {lam}.")
        if eps < 0:
            raise ValueError(f"eps must be nonnegative, got {eps}.")
        f = space.check_vector(f)
        if lam == 0:
            return ResolventResult(f.copy(), 0, 0.0, self._delta)
        g = np.zeros_like(f) if g is None else space.check_vector(g)
        u = f.copy() if u0 is None else space.check_vector(u0).copy()
        if self._graph.is_singular and self._delta == 0:
            levels: Sequence[float] = self._newton_settings.delta_ladder
        else:
            levels = (self._delta,)
        total = 0
        rnorm = 0.0
        previous: Optional[float] = None
        for d in levels:
            u, iters, rnorm = self._solve_level(lam, f, eps, g, d, u, previous)
            total += iters
            previous = d
        return ResolventResult(u, total, rnorm, levels[-1])

    def resolvent(self, lam: float, f: np.ndarray) -> np.ndarray:
        """
        Global resolvent (I + λA_δ)⁻¹ f.

        Non-expansive in H and energy decreasing.
        """
        return self.solve(lam, f).u

    def viscous_resolvent(
        self, lam: float, eps: float, g: np.ndarray, f: np.ndarray
    ) -> np.ndarray:
        """Solve u + λA_δ(u) + λε T(u - g) = f."""
        return self.solve(lam, f, eps=eps, g=g).u

    def hypothesis_audit(
        self,
        samples: Iterable[np.ndarray],
        c: float = 1.0,
        C: float = 0.0,
        n_values: Sequence[float] = (1, 10, 100, 1000),
    ) -> AuditReport:
        """
        Measure the growth, weak coercivity and dual-norm surplus on samples.

        Parameters
        ----------
        samples : Iterable[np.ndarray]
            Grid vectors.
        c : float, optional
            Coercivity factor of the dual-norm surplus, by default 1.
        C : float, optional
            Offset of the dual-norm surplus, by default 0.
        n_values : Sequence[float], optional
            Yosida indices for the weak coercivity check.

        Returns
        -------
        AuditReport
            The empirical constants; violations are logged.
        """
        space = self._space
        growth, coercivity, surplus = 0.0, np.inf, np.inf
        count = 0
        for u in samples:
            u = space.check_vector(u)
            eta = self.apply_selection(u)
            dual = space.norm_dual(eta)
            growth = max(growth, dual / (1.0 + space.norm_S(u)))
            for n in n_values:
                coercivity = min(coercivity, space.pairing(eta, space.yosida_T(n, u)))
            surplus = min(surplus, 2.0 * space.pairing(eta, u) - c * dual + C)
            count += 1
        if count == 0:
            raise ValueError("hypothesis_audit needs at least one sample.")
        violations = []
        if coercivity < -1e-8:
            violations.append("weak_coercivity")
        if surplus < 0:
            violations.append("dual_surplus")
        for name in violations:
            logger.warning(f"Drift condition {name} violated on the sample of {count}")
        return AuditReport(count, growth, float(coercivity), float(surplus), violations)


def gauge_norm(space: SpectralSpace, v: np.ndarray) -> float:
    """
    Luxemburg norm of the plasma profile θ.

    inf{k > 0 : h^dim Σ θ(v_j / k) <= 1}.

    Parameters
    ----------
    space : SpectralSpace
        Provides the grid weight.
    v : np.ndarray
        Grid vector.

    Returns
    -------
    float
        The gauge norm, 0 for v = 0.
    """
    v = space.check_vector(v)
    weight = space.grid.cell_weight
    if not np.any(v):
        return 0.0

    def excess(k: float) -> float:
        return float(weight * np.sum(theta(v / k))) - 1.0

    # θ(x) <= x², so the L² norm is an upper bracket
    hi = max(np.sqrt(weight * np.dot(v, v)), 1e-300)
    lo = hi
    while excess(lo) < 0:
        lo *= 0.5
    if lo == hi:
        return hi
    return float(brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12))
