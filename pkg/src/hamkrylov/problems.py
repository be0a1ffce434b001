"""Reproducible test problems: random Hamiltonian families and PDE
semi-discretizations (2D wave, 1D Maxwell, 3D Maxwell).

All generators are deterministic in their (parameters, seed) arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linalg import CsrMatrix, block_diag
from .systems import LinearHamiltonianSystem

FAMILY_BLOCKDIAG_SPD = "random_blockdiag_spd"
FAMILY_SKEW_HAMILTONIAN = "random_skew_hamiltonian"
FAMILY_FULL = "random_full"
FAMILY_SEPARABLE = "separable_identity_mass"
FAMILY_WAVE2D = "wave2d"
FAMILY_MAXWELL1D = "maxwell1d"
FAMILY_MAXWELL3D = "maxwell3d"

RANDOM_FAMILIES = (
    FAMILY_BLOCKDIAG_SPD,
    FAMILY_SKEW_HAMILTONIAN,
    FAMILY_FULL,
    FAMILY_SEPARABLE,
)
PDE_FAMILIES = (FAMILY_WAVE2D, FAMILY_MAXWELL1D, FAMILY_MAXWELL3D)
ALL_FAMILIES = RANDOM_FAMILIES + PDE_FAMILIES

INITIAL_RANDOM_UNIT = "random_unit"
INITIAL_ANALYTIC = "analytic"
INITIAL_ZERO_Q_RANDOM_P = "zero_q_random_p"

# Spectrum of the random SPD blocks; keeps ||A|| of order one so the default
# step size resolves every mode.
SPD_EIG_RANGE = (0.1, 2.0)


def _random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    eigs = rng.uniform(*SPD_EIG_RANGE, size=n)
    q = _random_orthogonal(rng, n)
    h = (q * eigs) @ q.T
    return 0.5 * (h + h.T)


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def gen_random(
    family: str, m: int, seed: int, initial: str | None = None
) -> tuple[LinearHamiltonianSystem, np.ndarray]:
    """Generate one random canonical system of half-dimension m plus y0."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = np.random.default_rng(seed)

    if family == FAMILY_BLOCKDIAG_SPD:
        h = block_diag(_random_spd(rng, m), _random_spd(rng, m))
        desc = "block-diagonal symmetric positive definite weight"
    elif family == FAMILY_SKEW_HAMILTONIAN:
        # A = [[F, G], [-G, F]] with F skew and G symmetric is both
        # skew-symmetric and Hamiltonian, hence JA = AJ.  The matching
        # weight is H = [[G, -F], [F, G]].
        raw_f = rng.standard_normal((m, m))
        raw_g = rng.standard_normal((m, m))
        f = 0.5 * (raw_f - raw_f.T)
        g = 0.5 * (raw_g + raw_g.T)
        h = np.block([[g, -f], [f, g]])
        h /= np.linalg.norm(h, 2)
        desc = "skew-symmetric Hamiltonian A (JA = AJ)"
    elif family == FAMILY_FULL:
        h = _random_spd(rng, 2 * m)
        desc = "dense symmetric positive definite weight"
    elif family == FAMILY_SEPARABLE:
        h = block_diag(_random_spd(rng, m), np.eye(m))
        desc = "separable weight blkdiag(H11, I)"
        if initial is None:
            initial = INITIAL_ZERO_Q_RANDOM_P
    else:
        raise ValueError(f"unknown random family {family!r}")

    if initial is None:
        initial = INITIAL_RANDOM_UNIT
    if initial == INITIAL_RANDOM_UNIT:
        y0 = _unit(rng, 2 * m)
    elif initial == INITIAL_ZERO_Q_RANDOM_P:
        y0 = np.concatenate([np.zeros(m), _unit(rng, m)])
    else:
        raise ValueError(f"initial mode {initial!r} not valid for {family}")

    return LinearHamiltonianSystem(h, description=desc), y0


def laplacian_2d(n_grid: int) -> CsrMatrix:
    """Discrete 2D Laplacian on the interior of an n_grid x n_grid square
    with homogeneous Dirichlet boundaries (negative definite)."""
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    inner = n_grid - 1
    dx2 = (1.0 / n_grid) ** 2
    rows, cols, vals = [], [], []

    def idx(i, j):
        return i * inner + j

    for i in range(inner):
        for j in range(inner):
            a = idx(i, j)
            rows.append(a)
            cols.append(a)
            vals.append(-4.0 / dx2)
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < inner and 0 <= jj < inner:
                    rows.append(a)
                    cols.append(idx(ii, jj))
                    vals.append(1.0 / dx2)
    size = inner * inner
    return CsrMatrix.from_coo(rows, cols, vals, (size, size))


def wave2d(n_grid: int, seed: int = 0) -> tuple[LinearHamiltonianSystem, np.ndarray]:
    """Semi-discretized 2D wave equation with Dirichlet boundaries.

    State dimension 2 (n_grid - 1)^2; A = [[0, I], [G, 0]] with G the
    five-point Laplacian, equivalently weight blkdiag(-G, I).
    """
    g = laplacian_2d(n_grid).to_dense()
    size = g.shape[0]
    h = block_diag(-g, np.eye(size))
    system = LinearHamiltonianSystem(
        CsrMatrix.from_dense(h), description=f"2D wave equation, grid {n_grid}"
    )
    rng = np.random.default_rng(seed)
    return system, _unit(rng, 2 * size)


def maxwell1d_matrices(n_grid: int) -> tuple[CsrMatrix, CsrMatrix]:
    """The skew matrix and the diagonal weight of the 1D Maxwell
    semi-discretization.

    The state is [E_1 .. E_{N-1}, B_0 .. B_N] of length 2N.  The coupling
    block G is (N-1) x (N+1) with rows (-1, 0, 1) shifted, except the first
    row starts with -2 and the last ends with 2; the diagonal weight has the
    two 1/2 entries on the B-boundary slots.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    n = n_grid
    ne, nb = n - 1, n + 1
    g = np.zeros((ne, nb))
    for r in range(ne):
        g[r, r] = -1.0
        g[r, r + 2] = 1.0
    g[0, 0] = -2.0
    g[ne - 1, nb - 1] = 2.0

    scale = 0.5 * n  # 1 / (2 h) with h = 1 / N
    skew = np.zeros((2 * n, 2 * n))
    skew[:ne, ne:] = scale * g
    skew[ne:, :ne] = -scale * g.T

    weight = np.ones(2 * n)
    weight[ne] = 0.5       # B_0 slot
    weight[2 * n - 1] = 0.5  # B_N slot
    return CsrMatrix.from_dense(skew), CsrMatrix.from_dense(np.diag(weight))


def maxwell1d(n_grid: int) -> tuple[LinearHamiltonianSystem, np.ndarray]:
    """1D Maxwell system dU/dt = S D U with S skew and D diagonal SPD.

    Exposed as a general (non-canonical) system with skew role S and weight
    role D, which is exactly what the weighted-Arnoldi method needs.  The
    initial fields are E(x) = sin(pi x), B(x) = cos(pi x) at the grid nodes.
    """
    skew, weight = maxwell1d_matrices(n_grid)
    n = n_grid
    x = np.arange(n + 1) / n
    e0 = np.sin(np.pi * x[1:n])
    b0 = np.cos(np.pi * x)
    u0 = np.concatenate([e0, b0])
    system = LinearHamiltonianSystem(
        weight, skew=skew, description=f"1D Maxwell equations, grid {n_grid}"
    )
    return system, u0


def grid_adjacency_3d(n_grid: int) -> CsrMatrix:
    """Symmetric nearest-neighbor coupling on the (n_grid-1)^3 interior grid,
    scaled by 1/(2 dx).  Stands in for the symmetric curl discretization."""
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    inner = n_grid - 1
    scale = 0.5 * n_grid  # 1 / (2 dx)
    rows, cols, vals = [], [], []

    def idx(i, j, k):
        return (i * inner + j) * inner + k

    for i in range(inner):
        for j in range(inner):
            for k in range(inner):
                a = idx(i, j, k)
                for di, dj, dk in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    ii, jj, kk = i + di, j + dj, k + dk
                    if ii < inner and jj < inner and kk < inner:
                        b = idx(ii, jj, kk)
                        rows += [a, b]
                        cols += [b, a]
                        vals += [scale, scale]
    size = inner**3
    return CsrMatrix.from_coo(rows, cols, vals, (size, size))


def maxwell3d(n_grid: int, seed: int = 0) -> tuple[LinearHamiltonianSystem, np.ndarray]:
    """3D Maxwell surrogate: A = [[0, -G1], [G1, 0]] with G1 symmetric.

    A is then both skew-symmetric and Hamiltonian; the matching weight
    blkdiag(-G1, -G1) is symmetric but indefinite, so the weighted-Arnoldi
    method is correctly rejected on this problem.
    """
    g1 = grid_adjacency_3d(n_grid).to_dense()
    h = block_diag(-g1, -g1)
    system = LinearHamiltonianSystem(
        CsrMatrix.from_dense(h), description=f"3D Maxwell surrogate, grid {n_grid}"
    )
    rng = np.random.default_rng(seed)
    return system, _unit(rng, 2 * g1.shape[0])


@dataclass(frozen=True)
class ProblemSpec:
    """Declarative description of one test problem."""

    family: str
    m: int | None = None
    grid_n: int | None = None
    seed: int = 0
    initial: str | None = None

    def __post_init__(self):
        if self.family not in ALL_FAMILIES:
            raise ConfigError(f"unknown problem family {self.family!r}")
        if self.family in RANDOM_FAMILIES and (self.m is None or self.m < 1):
            raise ConfigError(f"family {self.family!r} needs a positive 'm'")
        if self.family in PDE_FAMILIES and (self.grid_n is None or self.grid_n < 2):
            raise ConfigError(f"family {self.family!r} needs 'grid_n' of at least 2")
        if self.family == FAMILY_MAXWELL1D and self.grid_n is not None and self.grid_n < 3:
            raise ConfigError("maxwell1d needs 'grid_n' of at least 3")
        if self.family in PDE_FAMILIES and self.initial is not None:
            raise ConfigError(f"family {self.family!r} does not take 'initial'")
        if self.family in RANDOM_FAMILIES and self.initial not in (
            None,
            INITIAL_RANDOM_UNIT,
            INITIAL_ZERO_Q_RANDOM_P,
        ):
            raise ConfigError(f"unknown initial mode {self.initial!r}")

    def build(self) -> tuple[LinearHamiltonianSystem, np.ndarray]:
        if self.family in RANDOM_FAMILIES:
            return gen_random(self.family, self.m, self.seed, self.initial)
        if self.family == FAMILY_WAVE2D:
            return wave2d(self.grid_n, self.seed)
        if self.family == FAMILY_MAXWELL1D:
            return maxwell1d(self.grid_n)
        return maxwell3d(self.grid_n, self.seed)

    def label(self) -> str:
        size = f"m={self.m}" if self.m is not None else f"N={self.grid_n}"
        return f"{self.family}({size}, seed={self.seed})"
