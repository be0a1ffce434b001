"""Linear Hamiltonian systems and their conserved quantities.

A system is ``dy/dt = S W y`` with ``S`` skew-symmetric and ``W`` symmetric.
The canonical case has ``S = J = [[0, I], [-I, 0]]`` and ``W = H``; the
general case (skew stored as an explicit matrix) covers semi-discretizations
whose natural skew structure is not the canonical J.  The energy is
``0.5 y^T W y`` and the higher conserved quantities are
``0.5 <y, A^{2k} y>_W`` with ``A = S W``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MethodNotApplicableError, NotPositiveDefiniteError
from .linalg import (
    CsrMatrix,
    SymplecticOperator,
    as_dense,
    as_vector,
    j_apply,
    matvec,
    qr_factor,
    spectral_norm,
)

SYMMETRY_TOL = 1e-12

# Guard against accidentally densifying a genuinely large operator.
MAX_DENSE_DIM = 4096


def _max_abs(a) -> float:
    if isinstance(a, CsrMatrix):
        return float(np.max(np.abs(a.data))) if a.nnz else 0.0
    return float(np.max(np.abs(a))) if np.asarray(a).size else 0.0


class LinearHamiltonianSystem:
    """Immutable container for one linear Hamiltonian system.

    Parameters
    ----------
    weight:
        The symmetric matrix defining the energy (dense array or CsrMatrix).
    skew:
        ``None`` for the canonical J (requires even dimension), or an
        explicit skew-symmetric matrix of matching size.
    description:
        Free-form provenance string carried into exports.
    validate:
        Escape hatch for negative-control tests; leave True in normal use.
    """

    def __init__(self, weight, skew=None, description: str = "", validate: bool = True):
        if not isinstance(weight, CsrMatrix):
            weight = np.asarray(weight, dtype=float)
            if weight.ndim != 2 or weight.shape[0] != weight.shape[1]:
                raise DimensionMismatch("weight must be square")
        elif weight.rows != weight.cols:
            raise DimensionMismatch("weight must be square")
        self.weight = weight
        self.dim = weight.shape[0]
        self.description = description
        self._weight_dense: np.ndarray | None = None
        self._a_dense: np.ndarray | None = None
        self._weight_spd: bool | None = None

        if skew is None:
            if self.dim % 2 != 0:
                raise DimensionMismatch("canonical systems need even dimension")
            self.half_dim: int | None = self.dim // 2
            self.skew: SymplecticOperator | np.ndarray | CsrMatrix = SymplecticOperator(
                self.half_dim
            )
        else:
            if isinstance(skew, SymplecticOperator):
                if skew.dim != self.dim:
                    raise DimensionMismatch("skew operator size does not match weight")
                self.half_dim = skew.half_dim
                self.skew = skew
            else:
                if not isinstance(skew, CsrMatrix):
                    skew = np.asarray(skew, dtype=float)
                if skew.shape != (self.dim, self.dim):
                    raise DimensionMismatch("skew matrix size does not match weight")
                self.half_dim = None
                self.skew = skew

        if validate:
            self._validate()

    def _validate(self) -> None:
        w = self.weight_dense()
        scale = _max_abs(w)
        if w.size and not np.all(np.isfinite(w)):
            raise ValueError("weight matrix has non-finite entries")
        if np.max(np.abs(w - w.T), initial=0.0) > SYMMETRY_TOL * max(scale, 1e-300):
            raise ValueError("weight matrix is not symmetric to tolerance")
        if not self.canonical:
            s = as_dense(self.skew)
            s_scale = max(_max_abs(s), 1e-300)
            if np.max(np.abs(s + s.T), initial=0.0) > SYMMETRY_TOL * s_scale:
                raise ValueError("skew matrix is not skew-symmetric to tolerance")

    @property
    def canonical(self) -> bool:
        return isinstance(self.skew, SymplecticOperator)

    # -- operator application ------------------------------------------------

    def apply_weight(self, x: np.ndarray) -> np.ndarray:
        return matvec(self.weight, x)

    def apply_skew(self, x: np.ndarray) -> np.ndarray:
        if self.canonical:
            return j_apply(x, self.half_dim)
        return matvec(self.skew, x)

    def apply_a(self, x: np.ndarray) -> np.ndarray:
        """Apply A = (skew)(weight) without materializing it."""
        return self.apply_skew(self.apply_weight(x))

    def weight_dense(self) -> np.ndarray:
        if self._weight_dense is None:
            if self.dim > MAX_DENSE_DIM:
                raise MethodNotApplicableError(
                    f"refusing to densify a {self.dim}-dimensional weight matrix"
                )
            self._weight_dense = as_dense(self.weight)
        return self._weight_dense

    def materialize_a(self) -> np.ndarray:
        """Dense A = (skew)(weight); only sensible at desk scale."""
        if self._a_dense is None:
            w = self.weight_dense()
            if self.canonical:
                m = self.half_dim
                self._a_dense = np.vstack([w[m:, :], -w[:m, :]])
            else:
                self._a_dense = as_dense(self.skew) @ w
        return self._a_dense

    # -- conserved quantities --------------------------------------------------

    def energy(self, y: np.ndarray) -> float:
        """The quadratic energy 0.5 y^T W y."""
        y = as_vector(y)
        if y.size != self.dim:
            raise DimensionMismatch(f"state has length {y.size}, system has {self.dim}")
        return 0.5 * float(y @ self.apply_weight(y))

    def first_integral(self, k: int, y: np.ndarray) -> float:
        """The conserved quantity 0.5 <y, A^{2k} y>_W; k=0 is the energy."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        if k > self.dim:
            raise ValueError(f"k={k} exceeds the supported cap of {self.dim}")
        y = as_vector(y)
        if y.size != self.dim:
            raise DimensionMismatch(f"state has length {y.size}, system has {self.dim}")
        u = y
        for _ in range(2 * k):
            u = self.apply_a(u)
        return 0.5 * float(y @ self.apply_weight(u))

    def integral_gradient(self, k: int, y: np.ndarray) -> np.ndarray:
        """Gradient W A^{2k} y of the k-th conserved quantity."""
        u = as_vector(y)
        for _ in range(2 * k):
            u = self.apply_a(u)
        return self.apply_weight(u)

    def weight_is_spd(self) -> bool:
        """Lazily check positive definiteness by attempting a Cholesky factor."""
        if self._weight_spd is None:
            try:
                np.linalg.cholesky(self.weight_dense())
                self._weight_spd = True
            except np.linalg.LinAlgError:
                self._weight_spd = False
        return self._weight_spd

    def require_spd_weight(self) -> None:
        if not self.weight_is_spd():
            raise NotPositiveDefiniteError(
                "weight matrix is not positive definite; the weighted inner "
                "product would be degenerate"
            )


@dataclass(frozen=True)
class FirstIntegralFamily:
    """The family H_0 .. H_{k_max} of one system, evaluated together."""

    system: LinearHamiltonianSystem
    k_max: int

    def values(self, y: np.ndarray) -> np.ndarray:
        y = as_vector(y)
        out = np.empty(self.k_max + 1)
        u = y
        out[0] = 0.5 * float(y @ self.system.apply_weight(u))
        for k in range(1, self.k_max + 1):
            u = self.system.apply_a(self.system.apply_a(u))
            out[k] = 0.5 * float(y @ self.system.apply_weight(u))
        return out

    def gradients(self, y: np.ndarray) -> np.ndarray:
        """Column-stacked gradients of H_0 .. H_{k_max} at y."""
        y = as_vector(y)
        cols = []
        u = y
        cols.append(self.system.apply_weight(u))
        for _ in range(self.k_max):
            u = self.system.apply_a(self.system.apply_a(u))
            cols.append(self.system.apply_weight(u))
        return np.column_stack(cols)

    def rank_of_gradients(self, y: np.ndarray) -> int:
        _, _, rank = qr_factor(self.gradients(y))
        return rank


def poisson_bracket(sys: LinearHamiltonianSystem, k: int, p: int, y: np.ndarray) -> float:
    """Test probe: (grad H_k)^T J (grad H_p) at y, zero in exact arithmetic."""
    if not sys.canonical:
        raise MethodNotApplicableError("poisson_bracket needs the canonical J")
    gk = sys.integral_gradient(k, y)
    gp = sys.integral_gradient(p, y)
    return float(gk @ j_apply(gp, sys.half_dim))


@dataclass(frozen=True)
class StructureFlags:
    """Structural predicates of A with their violation magnitudes."""

    is_hamiltonian: bool
    is_skew: bool
    commutes_with_j: bool
    hamiltonian_defect: float
    skew_defect: float
    commutation_defect: float

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (self.is_hamiltonian, self.is_skew, self.commutes_with_j)


def structure_flags(sys: LinearHamiltonianSystem, tol: float = 1e-12) -> StructureFlags:
    """Evaluate (A Hamiltonian?, A skew?, JA = AJ?) to tolerance tol * max|A|."""
    if not sys.canonical:
        raise MethodNotApplicableError("structure_flags needs the canonical J")
    a = sys.materialize_a()
    m = sys.half_dim
    scale = max(_max_abs(a), 1e-300)
    ja = np.vstack([a[m:, :], -a[:m, :]])
    aj = np.hstack([-a[:, m:], a[:, :m]])

    ham_defect = float(np.max(np.abs(ja - ja.T), initial=0.0))
    skew_defect = float(np.max(np.abs(a + a.T), initial=0.0))
    comm_defect = float(np.max(np.abs(ja - aj), initial=0.0))
    cut = tol * scale
    return StructureFlags(
        is_hamiltonian=ham_defect <= cut,
        is_skew=skew_defect <= cut,
        commutes_with_j=comm_defect <= cut,
        hamiltonian_defect=ham_defect,
        skew_defect=skew_defect,
        commutation_defect=comm_defect,
    )


def energy_bound(sys: LinearHamiltonianSystem, y0: np.ndarray, seed: int = 0) -> float:
    """A-priori bound 0.5 ||y0||^2 ||W||_2 on the energy along orthogonal
    projections, valid when J and A commute (A skew)."""
    y0 = as_vector(y0)
    flags = structure_flags(sys)
    if not flags.commutes_with_j:
        warnings.warn(
            "energy_bound: J and A do not commute, the returned value is "
            "not a valid bound",
            stacklevel=2,
        )
    norm_w = spectral_norm(sys.weight, seed=seed)
    return 0.5 * float(y0 @ y0) * norm_w
