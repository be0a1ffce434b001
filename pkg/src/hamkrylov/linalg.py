"""Dense and sparse kernels shared by the projection methods.

Dense matrices are plain float64 ``numpy`` arrays.  Sparse matrices use a
small immutable CSR container so that the storage invariants (sorted column
indices, consistent row offsets, finite values) are checked once at
construction time.  Everything here is pure: no function mutates its inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularMatrixError

# Diagonal entries of R below this fraction of the largest one do not count
# towards the rank reported by qr_factor.
RANK_TOL = 1e-10

# Relative pivot threshold treated as singular in LU solves.
PIVOT_TOL = 1e-14


def as_vector(x) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    return v


def as_dense(a) -> np.ndarray:
    """Return ``a`` as a 2-d float64 array (CSR input is densified)."""
    if isinstance(a, CsrMatrix):
        return a.to_dense()
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed sparse row matrix with validated storage.

    Invariants enforced at construction: ``indptr`` is nondecreasing with
    ``indptr[-1] == len(data)``, column indices are strictly increasing
    within each row, and all stored values are finite.
    """

    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _row_of_entry: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        data = np.ascontiguousarray(self.data, dtype=float)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatch("negative matrix dimensions")
        if indptr.shape != (self.rows + 1,) or indptr[0] != 0:
            raise DimensionMismatch("row offsets must have length rows+1 and start at 0")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if indptr[-1] != data.size or indices.size != data.size:
            raise DimensionMismatch("row offsets inconsistent with stored values")
        if data.size and (indices.min() < 0 or indices.max() >= self.cols):
            raise DimensionMismatch("column index out of range")
        for r in range(self.rows):
            row_cols = indices[indptr[r]:indptr[r + 1]]
            if row_cols.size > 1 and np.any(np.diff(row_cols) <= 0):
                raise ValueError(f"column indices not strictly increasing in row {r}")
        if data.size and not np.all(np.isfinite(data)):
            raise ValueError("stored values must be finite")
        object.__setattr__(
            self, "_row_of_entry", np.repeat(np.arange(self.rows), np.diff(indptr))
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    @classmethod
    def from_coo(cls, rows, cols, values, shape) -> "CsrMatrix":
        """Build from coordinate triplets; duplicate entries are summed."""
        nr, nc = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size:
            keep = np.ones(rows.size, dtype=bool)
            keep[1:] = (np.diff(rows) != 0) | (np.diff(cols) != 0)
            group = np.cumsum(keep) - 1
            values = np.bincount(group, weights=values)
            rows, cols = rows[keep], cols[keep]
        nonzero = values != 0.0
        rows, cols, values = rows[nonzero], cols[nonzero], values[nonzero]
        indptr = np.zeros(nr + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(nr, nc, indptr, cols, values)

    @classmethod
    def from_dense(cls, a) -> "CsrMatrix":
        a = as_dense(a)
        r, c = np.nonzero(a)
        return cls.from_coo(r, c, a[r, c], a.shape)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = as_vector(x)
        if x.size != self.cols:
            raise DimensionMismatch(f"matrix has {self.cols} columns, vector has {x.size}")
        if self.nnz == 0:
            return np.zeros(self.rows)
        prod = self.data * x[self.indices]
        return np.bincount(self._row_of_entry, weights=prod, minlength=self.rows)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        if self.nnz:
            out[self._row_of_entry, self.indices] = self.data
        return out

    def transpose(self) -> "CsrMatrix":
        if self.nnz == 0:
            return CsrMatrix.from_coo([], [], [], (self.cols, self.rows))
        return CsrMatrix.from_coo(
            self.indices, self._row_of_entry, self.data, (self.cols, self.rows)
        )


def matvec(a, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product for dense arrays, CSR matrices or callables."""
    if isinstance(a, CsrMatrix):
        return a.matvec(x)
    if callable(a):
        return np.asarray(a(x), dtype=float)
    a = np.asarray(a, dtype=float)
    x = as_vector(x)
    if a.shape[1] != x.size:
        raise DimensionMismatch(f"matrix has {a.shape[1]} columns, vector has {x.size}")
    return a @ x


def as_operator(a):
    """Normalize a matrix-like object into a matvec callable."""
    if callable(a) and not isinstance(a, (np.ndarray, CsrMatrix)):
        return a
    if isinstance(a, CsrMatrix):
        return a.matvec
    dense = as_dense(a)
    return lambda x: dense @ x


@dataclass(frozen=True)
class SymplecticOperator:
    """The canonical skew operator J = [[0, I], [-I, 0]] on R^{2m}."""

    half_dim: int

    @property
    def dim(self) -> int:
        return 2 * self.half_dim

    def apply(self, x: np.ndarray) -> np.ndarray:
        return j_apply(x, self.half_dim)

    def to_dense(self) -> np.ndarray:
        m = self.half_dim
        out = np.zeros((2 * m, 2 * m))
        out[:m, m:] = np.eye(m)
        out[m:, :m] = -np.eye(m)
        return out


def j_apply(x: np.ndarray, half_dim: int | None = None) -> np.ndarray:
    """Apply the canonical J: (q, p) -> (p, -q)."""
    x = as_vector(x)
    if x.size % 2 != 0:
        raise DimensionMismatch("j_apply needs an even-length vector")
    m = x.size // 2
    if half_dim is not None and half_dim != m:
        raise DimensionMismatch(f"expected length {2 * half_dim}, got {x.size}")
    return np.concatenate([x[m:], -x[:m]])


def symplectic_inner(x: np.ndarray, y: np.ndarray) -> float:
    """The form x^T J y induced by the canonical J."""
    x, y = as_vector(x), as_vector(y)
    if x.size != y.size:
        raise DimensionMismatch("vectors must have equal length")
    return float(x @ j_apply(y))


class InnerProduct:
    """Euclidean inner product, or one weighted by a symmetric matrix."""

    def __init__(self, weight=None):
        self.weight = weight

    @classmethod
    def euclidean(cls) -> "InnerProduct":
        return cls(None)

    @classmethod
    def weighted_by(cls, weight) -> "InnerProduct":
        return cls(weight)

    @property
    def is_euclidean(self) -> bool:
        return self.weight is None

    def apply_weight(self, x: np.ndarray) -> np.ndarray:
        if self.weight is None:
            return as_vector(x)
        return matvec(self.weight, x)

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        x, y = as_vector(x), as_vector(y)
        if x.size != y.size:
            raise DimensionMismatch("vectors must have equal length")
        return float(x @ self.apply_weight(y))


def inner(ip: InnerProduct, x: np.ndarray, y: np.ndarray) -> float:
    return ip.value(x, y)


def qr_factor(a) -> tuple[np.ndarray, np.ndarray, int]:
    """Householder QR with a tolerance-based rank count.

    Returns (Q, R, rank) with rank the number of diagonal entries of R whose
    magnitude exceeds RANK_TOL times the largest one.
    """
    a = as_dense(a)
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch("qr_factor needs at least one row and column")
    q, r = np.linalg.qr(a, mode="reduced")
    diag = np.abs(np.diag(r))
    top = diag.max() if diag.size else 0.0
    rank = 0 if top == 0.0 else int(np.count_nonzero(diag > RANK_TOL * top))
    return q, r, rank


def _checked_lu(a: np.ndarray):
    with warnings.catch_warnings():
        # Singularity is detected below via the pivot tolerance.
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    top = diag.max() if diag.size else 0.0
    if top == 0.0 or diag.min() <= PIVOT_TOL * top or not np.isfinite(top):
        raise SingularMatrixError("matrix is singular to working tolerance")
    return lu, piv


def dense_solve(a, b: np.ndarray) -> np.ndarray:
    """Solve a x = b by LU with partial pivoting."""
    a = as_dense(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch("dense_solve needs a square matrix")
    b = as_vector(b)
    if b.size != a.shape[0]:
        raise DimensionMismatch("right-hand side length does not match")
    lu, piv = _checked_lu(a)
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def cayley_step(a, h: float, y: np.ndarray) -> np.ndarray:
    """One step of the Cayley map: solve (I - h/2 A) y' = (I + h/2 A) y.

    For a Hamiltonian A this map is symplectic and preserves the quadratic
    invariants of the flow up to linear-solve round-off.
    """
    a = as_dense(a)
    y = as_vector(y)
    n = a.shape[0]
    if a.shape[1] != n or y.size != n:
        raise DimensionMismatch("cayley_step needs a square matrix matching y")
    half = 0.5 * h * a
    rhs = y + half @ y
    return dense_solve(np.eye(n) - half, rhs)


class CayleyPropagator:
    """Repeated Cayley steps with the left-hand factorization reused."""

    def __init__(self, a, h: float):
        a = as_dense(a)
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch("propagator needs a square matrix")
        self.dim = a.shape[0]
        self.step_size = float(h)
        half = 0.5 * self.step_size * a
        self._plus = np.eye(self.dim) + half
        self._lu = _checked_lu(np.eye(self.dim) - half)

    def step(self, y: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, self._plus @ y, check_finite=False)


def spectral_norm(a, seed: int = 0, rtol: float = 1e-6, max_iter: int = 10_000) -> float:
    """2-norm estimate by power iteration on A^T A."""
    op = as_operator(a)
    if isinstance(a, CsrMatrix):
        op_t = a.transpose().matvec
        n = a.cols
    else:
        dense = as_dense(a)
        op_t = lambda x: dense.T @ x
        n = dense.shape[1]
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    lam = 0.0
    for _ in range(max_iter):
        w = op_t(op(u))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        lam_new = float(u @ w)
        u = w / norm_w
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def block_diag(*blocks) -> np.ndarray:
    return scipy.linalg.block_diag(*[as_dense(b) for b in blocks])
