"""Krylov basis constructions.

Three flavors:

* ``arnoldi`` with a configurable inner product (Euclidean or weighted by a
  symmetric positive definite matrix), modified Gram-Schmidt with two full
  re-orthogonalization passes;
* ``symplectic_lanczos`` producing a J-orthogonal basis of symplectic pairs
  with full J-re-orthogonalization each step;
* ``block_j_basis`` building an orthonormal factor V from the split Krylov
  matrix and lifting it to the block-diagonal J-orthogonal basis
  blkdiag(V, V).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    JOrthogonalityError,
    NotPositiveDefiniteError,
    SeriousBreakdownError,
)
from .linalg import InnerProduct, as_operator, as_vector, j_apply, qr_factor

# Default breakdown threshold is this fraction of the running estimate of
# the operator norm in the chosen inner product.
BREAKDOWN_RTOL = 1e-12

# Symplectic Lanczos aborts if the built basis drifts this far from
# S^T J S = J_2n.
J_ORTH_FAIL = 1e-6

FLAVOR_ARNOLDI = "arnoldi"
FLAVOR_WEIGHTED_ARNOLDI = "weighted_arnoldi"
FLAVOR_SYMPLECTIC_LANCZOS = "symplectic_lanczos"
FLAVOR_BLOCK_J = "block_j"


@dataclass(frozen=True)
class KrylovBasis:
    """One built basis together with its small projected matrix.

    ``vectors`` holds the basis columns (dim x d).  ``projected`` is the d x d
    matrix produced by the recurrence (upper Hessenberg for Arnoldi flavors,
    tridiagonal Hamiltonian in the [v | w] ordering for symplectic Lanczos,
    the assembled reduced matrix for the block flavor).  ``residual_vector``
    is the normalized next direction (or None when the recurrence closed),
    ``residual_coeff`` its magnitude.  ``breakdown`` records the step at
    which the recurrence terminated early, if it did.  ``half_block`` carries
    the orthonormal factor V for the block flavor.
    """

    flavor: str
    vectors: np.ndarray
    projected: np.ndarray
    residual_vector: np.ndarray | None
    residual_coeff: float
    breakdown: int | None = None
    half_block: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def num_vectors(self) -> int:
        return self.vectors.shape[1]


def arnoldi(
    operator,
    start: np.ndarray,
    num_vectors: int,
    inner: InnerProduct | None = None,
    breakdown_tol: float | None = None,
) -> KrylovBasis:
    """Arnoldi with modified Gram-Schmidt and two re-orthogonalization passes.

    Parameters
    ----------
    operator:
        Matrix or callable applying A.
    start:
        Nonzero start vector b; the first basis vector is b normalized in
        the chosen inner product.
    num_vectors:
        Requested number of basis vectors n.
    inner:
        Inner product; Euclidean when omitted.  A weighted inner product
        must use a symmetric positive definite weight (violations surface
        as a nonpositive squared norm during normalization).
    breakdown_tol:
        Absolute threshold on the next-vector norm below which the
        recurrence stops; defaults to BREAKDOWN_RTOL times a running
        estimate of the operator norm.

    Returns the basis V_n, the Hessenberg matrix of recurrence coefficients,
    and the residual pair (v_{n+1}, h_{n+1,n}).
    """
    apply_a = as_operator(operator)
    ip = inner if inner is not None else InnerProduct.euclidean()
    b = as_vector(start)
    if num_vectors < 1:
        raise ValueError("num_vectors must be at least 1")
    if not np.any(b):
        raise ValueError("start vector must be nonzero")

    def ip_norm_sq(x, wx) -> float:
        val = float(x @ wx)
        if ip.weight is not None and val <= 0.0:
            raise NotPositiveDefiniteError(
                "weighted inner product returned a nonpositive squared norm; "
                "the weight matrix is not positive definite"
            )
        return val

    wb = ip.apply_weight(b)
    nb = np.sqrt(ip_norm_sq(b, wb))
    basis = [b / nb]
    weighted = [wb / nb]

    n = num_vectors
    hess = np.zeros((n, n))
    residual_vector = None
    residual_coeff = 0.0
    breakdown = None
    scale_est = 0.0

    for j in range(n):
        w = apply_a(basis[j])
        if w.shape != b.shape:
            raise DimensionMismatch("operator changed the vector length")
        scale_est = max(scale_est, float(np.linalg.norm(w)))
        tol = breakdown_tol if breakdown_tol is not None else BREAKDOWN_RTOL * scale_est
        for _ in range(2):
            for i in range(j + 1):
                coeff = float(weighted[i] @ w)
                w = w - coeff * basis[i]
                hess[i, j] += coeff
        ww = ip.apply_weight(w)
        h_next = np.sqrt(max(ip_norm_sq(w, ww), 0.0))
        if h_next <= tol:
            breakdown = j + 1
            break
        if j + 1 < n:
            basis.append(w / h_next)
            weighted.append(ww / h_next)
            hess[j + 1, j] = h_next
        else:
            residual_vector = w / h_next
            residual_coeff = float(h_next)

    d = len(basis)
    return KrylovBasis(
        flavor=FLAVOR_ARNOLDI if ip.is_euclidean else FLAVOR_WEIGHTED_ARNOLDI,
        vectors=np.column_stack(basis),
        projected=hess[:d, :d].copy(),
        residual_vector=residual_vector,
        residual_coeff=residual_coeff,
        breakdown=breakdown,
    )


def small_j(pairs: int) -> np.ndarray:
    """The canonical J_{2n} on the reduced space, in [v | w] ordering."""
    out = np.zeros((2 * pairs, 2 * pairs))
    out[:pairs, pairs:] = np.eye(pairs)
    out[pairs:, :pairs] = -np.eye(pairs)
    return out


def symplectic_lanczos(
    operator,
    start: np.ndarray,
    num_pairs: int,
    breakdown_tol: float | None = None,
) -> KrylovBasis:
    """Symplectic Lanczos: a J-orthogonal basis S = [v_1..v_n, w_1..w_n].

    The v columns carry unit 2-norm and the pairing normalization
    omega(v_j, w_j) = 1 is carried by the w columns.  Candidates are
    J-re-orthogonalized against all completed pairs in two passes; the
    accumulated coefficients form the projected tridiagonal Hamiltonian
    matrix.  A vanishing pairing with a non-vanishing candidate is a serious
    breakdown and raises; a vanishing candidate truncates the basis to the
    completed pairs.
    """
    apply_a = as_operator(operator)
    y = as_vector(start)
    if y.size % 2 != 0:
        raise DimensionMismatch("symplectic Lanczos needs an even-dimensional space")
    if num_pairs < 1:
        raise ValueError("num_pairs must be at least 1")
    if not np.any(y):
        raise ValueError("start vector must be nonzero")

    n = num_pairs
    vs: list[np.ndarray] = []
    ws: list[np.ndarray] = []
    jvs: list[np.ndarray] = []
    jws: list[np.ndarray] = []
    proj = np.zeros((2 * n, 2 * n))
    residual_vector = None
    residual_coeff = 0.0
    breakdown = None
    scale_est = 0.0

    def tol_now() -> float:
        if breakdown_tol is not None:
            return breakdown_tol
        return BREAKDOWN_RTOL * max(scale_est, 1e-300)

    v = y / np.linalg.norm(y)
    for j in range(n):
        vs.append(v)
        jvs.append(j_apply(v))

        # Pair step: w_j from A v_j.
        u = apply_a(v)
        scale_est = max(scale_est, float(np.linalg.norm(u)))
        for _ in range(2):
            for i in range(j):
                on_v = float(u @ jws[i])       # omega(u, w_i)
                on_w = -float(jvs[i] @ u)      # omega(v_i, u)
                u = u - on_v * vs[i] - on_w * ws[i]
                proj[i, j] += on_v
                proj[n + i, j] += on_w
        pairing = -float(jvs[j] @ u)           # omega(v_j, u)
        norm_u = float(np.linalg.norm(u))
        if abs(pairing) <= tol_now() * max(norm_u, 1.0):
            if norm_u <= tol_now():
                # A v_j lies in the span of the completed pairs, but v_j
                # itself cannot be kept without a partner: it becomes the
                # residual of the truncated relation, with the coefficient
                # the previous advance step assigned to it.
                dropped = vs.pop()
                jvs.pop()
                breakdown = j
                residual_coeff = float(proj[j, n + j - 1])
                residual_vector = dropped
                break
            raise SeriousBreakdownError(
                f"symplectic Lanczos: pairing omega(v, Av) vanished at step "
                f"{j + 1} with candidate norm {norm_u:.3e}"
            )
        w = u / pairing
        proj[n + j, j] = pairing
        ws.append(w)
        jws.append(j_apply(w))

        # Advance step: v_{j+1} from A w_j.
        u = apply_a(w)
        scale_est = max(scale_est, float(np.linalg.norm(u)))
        for _ in range(2):
            for i in range(j + 1):
                on_v = float(u @ jws[i])
                on_w = -float(jvs[i] @ u)
                u = u - on_v * vs[i] - on_w * ws[i]
                proj[i, n + j] += on_v
                proj[n + i, n + j] += on_w
        zeta = float(np.linalg.norm(u))
        if j + 1 < n:
            if zeta <= tol_now():
                breakdown = j + 1
                break
            v = u / zeta
            proj[j + 1, n + j] = zeta
        else:
            if zeta > tol_now():
                residual_vector = u / zeta
                residual_coeff = zeta

    pairs = len(ws)
    if pairs == 0:
        raise SeriousBreakdownError("symplectic Lanczos produced no complete pair")
    basis = np.column_stack(vs[:pairs] + ws)
    keep = list(range(pairs)) + list(range(n, n + pairs))
    projected = proj[np.ix_(keep, keep)].copy()

    jerr = j_orthogonality_error(basis)
    if jerr > J_ORTH_FAIL:
        raise JOrthogonalityError(
            f"basis lost J-orthogonality: max deviation {jerr:.3e} exceeds "
            f"{J_ORTH_FAIL:.0e}; consider restarting from a perturbed vector"
        )

    return KrylovBasis(
        flavor=FLAVOR_SYMPLECTIC_LANCZOS,
        vectors=basis,
        projected=projected,
        residual_vector=residual_vector,
        residual_coeff=residual_coeff,
        breakdown=breakdown,
    )


def j_orthogonality_error(basis: np.ndarray) -> float:
    """Max-norm deviation of S^T J S from the canonical small form."""
    d = basis.shape[1]
    if d % 2 != 0:
        raise DimensionMismatch("a J-orthogonal basis has an even column count")
    js = np.column_stack([j_apply(basis[:, i]) for i in range(d)])
    gram = basis.T @ js
    return float(np.max(np.abs(gram - small_j(d // 2))))


def block_j_basis(
    operator,
    start: np.ndarray,
    num_krylov: int,
    stabilized: bool = True,
) -> KrylovBasis:
    """Block J-orthogonal basis from the split Krylov matrix.

    The Krylov matrix K_n = [y, Ay, ..., A^{n-1} y] (or, in stabilized mode,
    an orthonormal basis of the same subspace computed by Arnoldi) is split
    into its top and bottom halves, the concatenation [K^q, K^p] is
    QR-factored, and V keeps the first k = rank columns of Q.  The returned
    basis is S = blkdiag(V, V), which is exactly J-orthogonal, and the
    projected matrix is the reduced Hamiltonian matrix
    J_{2k}^{-1} S^T J A S.
    """
    apply_a = as_operator(operator)
    y = as_vector(start)
    if y.size % 2 != 0:
        raise DimensionMismatch("block basis needs an even-dimensional space")
    if num_krylov < 1:
        raise ValueError("num_krylov must be at least 1")
    if not np.any(y):
        raise ValueError("start vector must be nonzero")
    m = y.size // 2

    if stabilized:
        krylov = arnoldi(apply_a, y, num_krylov).vectors
    else:
        cols = [y]
        v = y
        for _ in range(num_krylov - 1):
            v = apply_a(v)
            cols.append(v)
        krylov = np.column_stack(cols)

    split = np.hstack([krylov[:m, :], krylov[m:, :]])
    q, _, rank = qr_factor(split)
    if rank == 0:
        raise ValueError("split Krylov matrix has rank zero")
    half = q[:, :rank].copy()

    zeros = np.zeros((m, rank))
    basis = np.block([[half, zeros], [zeros, half]])
    projected = assemble_reduced_hamiltonian(apply_a, basis)
    return KrylovBasis(
        flavor=FLAVOR_BLOCK_J,
        vectors=basis,
        projected=projected,
        residual_vector=None,
        residual_coeff=0.0,
        half_block=half,
    )


def assemble_reduced_hamiltonian(operator, basis: np.ndarray) -> np.ndarray:
    """Reduced matrix J_d^{-1} S^T J (A S) for a J-orthogonal basis S.

    The middle factor S^T J A S equals -S^T H S for A = J H, so the result
    equals J_d S^T H S; the symmetric factor is symmetrized before the exact
    block swap so the reduced system is Hamiltonian to round-off.
    """
    apply_a = as_operator(operator)
    d = basis.shape[1]
    if d % 2 != 0:
        raise DimensionMismatch("reduced assembly needs an even column count")
    k = d // 2
    a_cols = np.column_stack([apply_a(basis[:, i]) for i in range(d)])
    ja_cols = np.column_stack([j_apply(a_cols[:, i]) for i in range(d)])
    # S^T J A S = -S^T H S exactly, since J(A x) = J(J(H x)) = -H x.
    sym = -(basis.T @ ja_cols)
    sym = 0.5 * (sym + sym.T)
    return np.vstack([sym[k:, :], -sym[:k, :]])
