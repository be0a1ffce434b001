"""Matrix Market import/export for sparse systems and dense bases.

Coordinate files use 1-based indices; ``general`` and ``symmetric``
qualifiers on the header line are honored on read (symmetric storage is
expanded to the full matrix) and can be requested on write.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .linalg import CsrMatrix, as_dense


def write_sparse(path, matrix, symmetric: bool = False) -> None:
    """Write a sparse matrix in coordinate format.

    With ``symmetric=True`` only the lower triangle is stored and the header
    carries the ``symmetric`` qualifier.
    """
    if isinstance(matrix, CsrMatrix):
        dense = matrix.to_dense()
    else:
        dense = as_dense(matrix)
    coo = scipy.sparse.coo_matrix(dense)
    symmetry = "symmetric" if symmetric else "general"
    scipy.io.mmwrite(str(path), coo, field="real", symmetry=symmetry)


def read_sparse(path) -> CsrMatrix:
    """Read a coordinate-format file into a CSR matrix."""
    mat = scipy.io.mmread(str(path))
    coo = scipy.sparse.coo_matrix(mat)
    return CsrMatrix.from_coo(coo.row, coo.col, coo.data, coo.shape)


def write_dense(path, matrix) -> None:
    """Write a dense matrix (for example a Krylov basis) in array format."""
    arr = np.atleast_2d(np.asarray(matrix, dtype=float))
    scipy.io.mmwrite(str(path), arr, field="real")


def read_dense(path) -> np.ndarray:
    arr = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(arr):
        arr = arr.toarray()
    return np.asarray(arr, dtype=float)


def write_vector(path, vector) -> None:
    write_dense(path, np.asarray(vector, dtype=float).reshape(-1, 1))


def read_vector(path) -> np.ndarray:
    arr = read_dense(path)
    return arr.reshape(-1)


def header_line(path) -> str:
    return Path(path).read_text().splitlines()[0]
