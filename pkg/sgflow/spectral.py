"""Discrete Gelfand triples on rectangular grids."""

import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy import sparse

from sgflow.constants import BoundaryCondition, TripleMode

logger = logging.getLogger("Spectral")

# exponents of the eigenvalue weights for (S, H, S*) in each triple
_EXPONENTS = {
    TripleMode.H1_OVER_L2: (1.0, 0.0, -1.0),
    TripleMode.L2_OVER_HM1: (0.0, -1.0, -2.0),
}


class GridDomain:
    """
    Uniform grid on the unit square (or interval) with spacing 1/(n+1).

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    n : int
        Interior nodes per axis.
    bc : BoundaryCondition, optional
        Boundary condition, by default Dirichlet.

    Attributes
    ----------
    h : float
        Grid spacing.
    size : int
        Number of unknowns, ``n ** dim``.
    cell_weight : float
        Quadrature weight ``h ** dim`` of one node (or one gradient cell).

    Raises
    ------
    ValueError
        If dim is not 1 or 2, or n < 2.
    """

    def __init__(
        self,
        dim: int,
        n: int,
        bc: Union[BoundaryCondition, str] = BoundaryCondition.DIRICHLET,
    ) -> None:
        """Initialize the grid."""
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}.")
        if n < 2:
            raise ValueError(f"n must be at least 2, got {n}.")
        self._dim = int(dim)
        self._n = int(n)
        self._bc = BoundaryCondition(bc)
        self._h = 1.0 / (self._n + 1)

    @property
    def dim(self) -> int:
        """Spatial dimension."""
        return self._dim

    @property
    def n(self) -> int:
        """Interior nodes per axis."""
        return self._n

    @property
    def bc(self) -> BoundaryCondition:
        """Boundary condition."""
        return self._bc

    @property
    def h(self) -> float:
        """Grid spacing."""
        return self._h

    @property
    def size(self) -> int:
        """Number of grid unknowns."""
        return self._n**self._dim

    @property
    def cell_weight(self) -> float:
        """Quadrature weight h**dim."""
        return self._h**self._dim

    def __repr__(self) -> str:
        """Return a string representation of the grid."""
        return f"GridDomain(dim={self.dim}, n={self.n}, bc={self.bc.value}, h={self.h:.6g})"

    def __eq__(self, other: object) -> bool:
        """Grids are equal when dim, n and bc agree."""
        if not isinstance(other, GridDomain):
            return NotImplemented
        return (self.dim, self.n, self.bc) == (other.dim, other.n, other.bc)

    def coordinates(self) -> np.ndarray:
        """
        Node coordinates in row-major order.

        Returns
        -------
        np.ndarray
            Array of shape (size, dim).
        """
        axis = np.arange(1, self.n + 1) * self.h
        if self.dim == 1:
            return axis[:, None]
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """Discrete inner product (u, v)_h = h**dim * sum(u * v)."""
        return float(self.cell_weight * np.dot(u, v))

    def _difference_1d(self) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
        """Forward difference along one axis and the matching transverse padding."""
        n, h = self.n, self.h
        if self.bc == BoundaryCondition.DIRICHLET:
            # cells 0..n, ghost zeros at both ends
            diff = sparse.diags(
                [np.full(n, 1.0 / h), np.full(n, -1.0 / h)], [0, -1], shape=(n + 1, n)
            )
            pad = sparse.diags([np.ones(n)], [-1], shape=(n + 1, n))
        else:
            # reflecting: the last cell carries no flux
            main = np.full(n, -1.0 / h)
            main[-1] = 0.0
            diff = sparse.diags([main, np.full(n - 1, 1.0 / h)], [0, 1], shape=(n, n))
            pad = sparse.identity(n)
        return sparse.csr_matrix(diff), sparse.csr_matrix(pad)

    def gradient_matrix(self) -> sparse.csr_matrix:
        """
        Forward-difference gradient, stacked by component.

        Returns
        -------
        sparse.csr_matrix
            Matrix of shape (dim * n_cells, size). Its transpose is the discrete
            negative divergence, and ``G.T @ G`` is the five-point (or three-point)
            negative Laplacian.
        """
        diff, pad = self._difference_1d()
        if self.dim == 1:
            return diff
        gx = sparse.kron(diff, pad)
        gy = sparse.kron(pad, diff)
        return sparse.csr_matrix(sparse.vstack([gx, gy]))

    @property
    def n_cells(self) -> int:
        """Number of gradient cells."""
        per_axis = self.n + 1 if self.bc == BoundaryCondition.DIRICHLET else self.n
        return per_axis**self.dim

    def laplacian(self) -> sparse.csr_matrix:
        """Negative discrete Laplacian T = G^T G."""
        grad = self.gradient_matrix()
        return sparse.csr_matrix(grad.T @ grad)

    def eigen_1d(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Closed-form eigenpairs of the one-dimensional negative Laplacian.

        Returns
        -------
        Tuple[np.ndarray, np.ndarray]
            Eigenvalues of length n and eigenvector matrix of shape (n, n),
            orthonormal under (·,·)_h on one axis. The Neumann list starts with
            the constant mode (eigenvalue 0).
        """
        n, h = self.n, self.h
        j = np.arange(1, n + 1)
        if self.bc == BoundaryCondition.DIRICHLET:
            k = np.arange(1, n + 1)
            lam = (2.0 / h**2) * (1.0 - np.cos(k * np.pi * h))
            vec = np.sqrt(2.0) * np.sin(np.pi * np.outer(j, k) * h)
        else:
            k = np.arange(n)
            lam = (2.0 / h**2) * (1.0 - np.cos(k * np.pi / n))
            vec = np.sqrt(2.0 / (h * n)) * np.cos(np.pi * np.outer(j - 0.5, k) / n)
            vec[:, 0] = 1.0 / np.sqrt(h * n)
            lam[0] = 0.0
        return lam, vec


class SpectralSpace:
    """
    Discrete Gelfand triple S ⊂ H ⊂ S* built on the eigenbasis of T = -Δ_h.

    Every norm and operator is evaluated through the spectral coefficients
    ``c_k = (v, e_k)_h``. In ``H1_over_L2`` the triple is (H¹₀, L², H⁻¹); in
    ``L2_over_Hm1`` it is (L², H⁻¹, H⁻²). Elements of S* are stored as grid
    vectors and paired with :meth:`pairing`.

    Parameters
    ----------
    grid : GridDomain
        The grid.
    triple_mode : TripleMode, optional
        Which triple to realise, by default H1_over_L2.
    n_modes : Optional[int], optional
        Number of retained modes K, by default the full grid dimension
        (minus the constant mode under NeumannMeanZero).

    Raises
    ------
    ValueError
        If n_modes is outside [1, full dimension].
    """

    def __init__(
        self,
        grid: GridDomain,
        triple_mode: Union[TripleMode, str] = TripleMode.H1_OVER_L2,
        n_modes: Optional[int] = None,
    ) -> None:
        """Initialize the space and compute the eigendecomposition."""
        self._grid = grid
        self._mode = TripleMode(triple_mode)
        lam, vec = self._build_basis()
        full = len(lam)
        if n_modes is None:
            n_modes = full
        if not 1 <= n_modes <= full:
            raise ValueError(f"n_modes must be in [1, {full}], got {n_modes}.")
        self._eigenvalues = lam[:n_modes]
        self._eigenvectors = vec[:, :n_modes]
        self._laplacian = grid.laplacian()
        self._gradient = grid.gradient_matrix()
        self._exp_s, self._exp_h, self._exp_dual = _EXPONENTS[self._mode]
        logger.debug(f"Built {self}")

    def _build_basis(self) -> Tuple[np.ndarray, np.ndarray]:
        lam1, vec1 = self._grid.eigen_1d()
        if self._grid.dim == 1:
            lam, vec = lam1, vec1
        else:
            lam = np.add.outer(lam1, lam1).ravel()
            vec = np.kron(vec1, vec1)
        if self._grid.bc == BoundaryCondition.NEUMANN_MEAN_ZERO:
            # the constant mode is always index 0
            lam, vec = lam[1:], vec[:, 1:]
        order = np.argsort(lam, kind="stable")
        return lam[order], vec[:, order]

    @property
    def grid(self) -> GridDomain:
        """The grid."""
        return self._grid

    @property
    def triple_mode(self) -> TripleMode:
        """The triple mode."""
        return self._mode

    @property
    def eigenvalues(self) -> np.ndarray:
        """Retained eigenvalues, ascending."""
        return self._eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        """Retained eigenvectors as columns."""
        return self._eigenvectors

    @property
    def n_modes(self) -> int:
        """Number of retained modes K."""
        return len(self._eigenvalues)

    @property
    def size(self) -> int:
        """Grid dimension."""
        return self._grid.size

    @property
    def laplacian(self) -> sparse.csr_matrix:
        """Sparse T = -Δ_h."""
        return self._laplacian

    @property
    def gradient(self) -> sparse.csr_matrix:
        """Sparse forward-difference gradient."""
        return self._gradient

    @property
    def h_weights(self) -> np.ndarray:
        """‖e_k‖_H², so that ‖v‖_H² = Σ_k ‖e_k‖_H² c_k²."""
        return self._eigenvalues**self._exp_h

    def coefficient_rows(self, states: np.ndarray) -> np.ndarray:
        """Spectral coefficients of every row of ``states``."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        return self._grid.cell_weight * (states @ self._eigenvectors)

    @property
    def embedding_constant(self) -> float:
        """C_emb = λ_1^(-1/2)."""
        return float(self._eigenvalues[0] ** -0.5)

    def __repr__(self) -> str:
        """Return a string representation of the space."""
        return (
            f"SpectralSpace(grid={self._grid}, triple_mode={self._mode.value}, "
            f"n_modes={self.n_modes})"
        )

    def check_vector(self, v: np.ndarray) -> np.ndarray:
        """
        Validate a grid vector.

        Raises
        ------
        ValueError
            If v does not have the grid dimension.
        """
        arr = np.asarray(v, dtype=float)
        if arr.shape != (self.size,):
            raise ValueError(
                f"Expected a grid vector of shape ({self.size},), got {arr.shape}."
            )
        return arr

    def coefficients(self, v: np.ndarray) -> np.ndarray:
        """Spectral coefficients c_k = (v, e_k)_h."""
        v = self.check_vector(v)
        return self._grid.cell_weight * (self._eigenvectors.T @ v)

    def synthesize(self, coef: np.ndarray) -> np.ndarray:
        """Grid vector with the given spectral coefficients."""
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.n_modes,):
            raise ValueError(
                f"Expected {self.n_modes} coefficients, got shape {coef.shape}."
            )
        return self._eigenvectors @ coef

    def _weighted(self, exponent: float, c1: np.ndarray, c2: np.ndarray) -> float:
        return float(np.sum(self._eigenvalues**exponent * c1 * c2))

    def norms(self, v: np.ndarray) -> Tuple[float, float, float]:
        """
        Compute the three norms of the triple.

        Parameters
        ----------
        v : np.ndarray
            Grid vector.

        Returns
        -------
        Tuple[float, float, float]
            (‖v‖_S, ‖v‖_H, ‖v‖_{S*}).

        Raises
        ------
        ValueError
            If v does not have the grid dimension.

        Examples
        --------
        >>> space = SpectralSpace(GridDomain(1, 8))
        >>> s, h, d = space.norms(space.eigenvectors[:, 0])
        """
        c = self.coefficients(v)
        return (
            np.sqrt(self._weighted(self._exp_s, c, c)),
            np.sqrt(self._weighted(self._exp_h, c, c)),
            np.sqrt(self._weighted(self._exp_dual, c, c)),
        )

    def norm_S(self, v: np.ndarray) -> float:
        """‖v‖_S."""
        c = self.coefficients(v)
        return float(np.sqrt(self._weighted(self._exp_s, c, c)))

    def norm_H(self, v: np.ndarray) -> float:
        """‖v‖_H."""
        c = self.coefficients(v)
        return float(np.sqrt(self._weighted(self._exp_h, c, c)))

    def norm_dual(self, v: np.ndarray) -> float:
        """‖v‖_{S*}."""
        c = self.coefficients(v)
        return float(np.sqrt(self._weighted(self._exp_dual, c, c)))

    def inner_H(self, u: np.ndarray, v: np.ndarray) -> float:
        """(u, v)_H."""
        return self._weighted(self._exp_h, self.coefficients(u), self.coefficients(v))

    def inner_S(self, u: np.ndarray, v: np.ndarray) -> float:
        """(u, v)_S."""
        return self._weighted(self._exp_s, self.coefficients(u), self.coefficients(v))

    def pairing(self, eta: np.ndarray, w: np.ndarray) -> float:
        """
        Dual pairing ⟨η, w⟩ of an S*-representative with a grid vector.

        The pairing extends (·,·)_H, so in ``H1_over_L2`` it is (η, w)_h and in
        ``L2_over_Hm1`` it is (T⁻¹η, w)_h.
        """
        return self.inner_H(eta, w)

    def resolvent_J(self, n: float, v: np.ndarray) -> np.ndarray:
        """
        Resolvent J_n v = (I + T/n)⁻¹ v.

        Parameters
        ----------
        n : float
            Resolvent index, at least 1.
        v : np.ndarray
            Grid vector.

        Returns
        -------
        np.ndarray
            J_n v. Components outside the retained modes are left unchanged.

        Raises
        ------
        ValueError
            If n < 1.
        """
        if n < 1:
            raise ValueError(f"Resolvent index must be >= 1, got {n}.")
        v = self.check_vector(v)
        c = self.coefficients(v)
        lam = self._eigenvalues
        return v - self._eigenvectors @ (lam / (n + lam) * c)

    def yosida_T(self, n: float, v: np.ndarray) -> np.ndarray:
        """Yosida approximation T_n v = n(v - J_n v) = T J_n v."""
        if n < 1:
            raise ValueError(f"Yosida index must be >= 1, got {n}.")
        c = self.coefficients(v)
        lam = self._eigenvalues
        return self._eigenvectors @ (n * lam / (n + lam) * c)

    def approx_norm(self, n: float, v: np.ndarray) -> float:
        """
        Approximating norm ‖v‖_n = sqrt((v, T_n v)_H).

        Nondecreasing in n and bounded by ‖v‖_S.
        """
        if n < 1:
            raise ValueError(f"Norm index must be >= 1, got {n}.")
        c = self.coefficients(v)
        lam = self._eigenvalues
        weight = lam**self._exp_h * (n * lam / (n + lam))
        return float(np.sqrt(np.sum(weight * c * c)))

    def project_P(self, m: int, v: np.ndarray) -> np.ndarray:
        """
        Orthogonal projection onto the first m eigenmodes.

        Raises
        ------
        ValueError
            If m is outside [1, K].
        """
        if not 1 <= m <= self.n_modes:
            raise ValueError(f"m must be in [1, {self.n_modes}], got {m}.")
        c = self.coefficients(v)
        return self._eigenvectors[:, :m] @ c[:m]

    def riesz_iS(self, v: np.ndarray) -> np.ndarray:
        """Riesz map of S, i_S v = T v."""
        v = self.check_vector(v)
        return self._laplacian @ v

    def apply_T(self, v: np.ndarray) -> np.ndarray:
        """T v through the sparse stencil."""
        return self.riesz_iS(v)

    def solve_T(self, v: np.ndarray) -> np.ndarray:
        """T⁻¹ v on the retained modes."""
        c = self.coefficients(v)
        return self._eigenvectors @ (c / self._eigenvalues)

    def fractional_norm(self, v: np.ndarray) -> float:
        """Graph norm of T^(3/2): sqrt(sum (1 + λ_k³) c_k²)."""
        c = self.coefficients(v)
        return float(np.sqrt(np.sum((1.0 + self._eigenvalues**3) * c * c)))

    def project_mean_zero(self, v: np.ndarray) -> np.ndarray:
        """Remove the grid mean under NeumannMeanZero; identity otherwise."""
        v = self.check_vector(v)
        if self._grid.bc == BoundaryCondition.NEUMANN_MEAN_ZERO:
            return v - v.mean()
        return v.copy()
