"""Complex dense and sparse linear-algebra kernels used by every other module.

Dense factorizations are backed by LAPACK (via numpy/scipy), which implements
the same algorithms the contracts ask for (Householder QR, Hessenberg reduction
plus shifted QR for the Schur form, Golub-Kahan bidiagonalization for the SVD).
All results are post-checked against the contracts here, so a LAPACK failure or
loss of precision surfaces as a package error rather than silent garbage.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DimensionMismatch, IterationLimit

__all__ = [
    "SparseMatrix",
    "qr_factor",
    "schur_decompose",
    "svd",
    "dense_eig",
    "sparse_matvec",
    "save_triplets",
    "load_triplets",
    "as_operator",
]


def _as_complex_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={a.ndim}")
    return a


class SparseMatrix:
    """Complex sparse matrix with triplet semantics.

    Duplicate (row, col) entries are summed at construction.  The matvec sums
    contributions in (row, col) order, so results are bit-reproducible.
    """

    def __init__(self, *args, **kwargs):
        raise TypeError("use SparseMatrix.from_triplets or SparseMatrix.from_dense")

    @classmethod
    def from_triplets(cls, row, col, val, shape) -> "SparseMatrix":
        self = object.__new__(cls)
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.asarray(val, dtype=complex)
        if not (row.shape == col.shape == val.shape):
            raise DimensionMismatch("triplet arrays must have equal length")
        nrows, ncols = shape
        if row.size and (row.min() < 0 or row.max() >= nrows or col.min() < 0 or col.max() >= ncols):
            raise DimensionMismatch("triplet index out of bounds")
        # sum duplicates, then keep entries sorted by (row, col)
        order = np.lexsort((col, row))
        row, col, val = row[order], col[order], val[order]
        if row.size:
            keys = row * ncols + col
            uniq, inverse = np.unique(keys, return_inverse=True)
            summed = np.zeros(uniq.size, dtype=complex)
            np.add.at(summed, inverse, val)
            row = (uniq // ncols).astype(np.int64)
            col = (uniq % ncols).astype(np.int64)
            val = summed
        self.row, self.col, self.val = row, col, val
        self.shape = (int(nrows), int(ncols))
        return self

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = _as_complex_matrix(a)
        row, col = np.nonzero(a)
        return cls.from_triplets(row, col, a[row, col], a.shape)

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        idx = np.arange(n)
        return cls.from_triplets(idx, idx, np.ones(n, dtype=complex), (n, n))

    @property
    def nnz(self) -> int:
        return self.val.size

    def prune(self, tol: float = 0.0) -> "SparseMatrix":
        keep = np.abs(self.val) > tol
        return SparseMatrix.from_triplets(self.row[keep], self.col[keep], self.val[keep], self.shape)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        out[self.row, self.col] += self.val
        return out

    def to_csr(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(
            (self.val, (self.row, self.col)), shape=self.shape
        )

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return sparse_matvec(self, v)

    def __matmul__(self, other):
        if isinstance(other, np.ndarray) and other.ndim == 1:
            return self.matvec(other)
        return NotImplemented


def sparse_matvec(a: SparseMatrix, v: np.ndarray, deterministic: bool = True) -> np.ndarray:
    """Triplet-sum product a @ v, accumulated in (row, col) order by default."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (a.shape[1],):
        raise DimensionMismatch(f"operand length {v.shape} incompatible with {a.shape}")
    if not deterministic:
        return a.to_csr() @ v
    out = np.zeros(a.shape[0], dtype=complex)
    # entries are stored sorted by (row, col); np.add.at accumulates in array order
    np.add.at(out, a.row, a.val * v[a.col])
    return out


def _check_finite(*mats):
    for m in mats:
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise IterationLimit("factorization produced non-finite entries")


def qr_factor(a) -> tuple[np.ndarray, np.ndarray]:
    """Householder QR of a square complex matrix: a = Q R, Q unitary, R upper triangular."""
    a = _as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch("qr_factor expects a square matrix")
    q, r = np.linalg.qr(a)
    _check_finite(q, r)
    return q, r


def schur_decompose(a, max_sweeps_per_eig: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form a = S T S*, T upper triangular, S unitary.

    LAPACK's zgees performs the Hessenberg reduction followed by shifted QR
    iteration; a failure to deflate surfaces as IterationLimit.
    """
    a = _as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch("schur_decompose expects a square matrix")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch("schur_decompose requires finite entries")
    try:
        t, s = scipy.linalg.schur(a, output="complex")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise IterationLimit(str(exc)) from exc
    _check_finite(t, s)
    return t, s


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition a = U diag(sigma) V*. Returns (U, sigma, V)."""
    a = _as_complex_matrix(a)
    try:
        u, sig, vh = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise IterationLimit(str(exc)) from exc
    _check_finite(u, vh)
    return u, sig, vh.conj().T


def dense_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """All eigenvalues and right eigenvectors of a square complex matrix.

    Eigenvectors come from back substitution on the Schur form and may be
    linearly dependent for defective matrices; eigenvalues are always valid.
    Used throughout the test suite as the brute-force oracle.
    """
    a = _as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch("dense_eig expects a square matrix")
    try:
        w, v = scipy.linalg.eig(a)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise IterationLimit(str(exc)) from exc
    order = np.lexsort((w.imag, w.real))
    return w[order], v[:, order]


def as_operator(a):
    """Normalize a matrix-like object to (n, matvec) for the Krylov solvers."""
    if isinstance(a, SparseMatrix):
        csr = a.to_csr()
        return a.shape[0], lambda v: csr @ v
    if scipy.sparse.issparse(a):
        csr = a.tocsr()
        return a.shape[0], lambda v: csr @ v
    if isinstance(a, np.ndarray):
        m = np.ascontiguousarray(a, dtype=complex)
        return m.shape[0], lambda v: m @ v
    if isinstance(a, tuple) and len(a) == 2 and callable(a[1]):
        return int(a[0]), a[1]
    raise TypeError(f"cannot interpret {type(a)!r} as a linear operator")


def save_triplets(path, a: SparseMatrix) -> None:
    """Plain-text triplet export: header 'rows cols nnz', then 'row col re im' lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]} {a.nnz}\n")
        for r, c, v in zip(a.row, a.col, a.val):
            fh.write(f"{r} {c} {v.real!r} {v.imag!r}\n")


def load_triplets(path) -> SparseMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        nrows, ncols, nnz = map(int, header)
        row = np.empty(nnz, dtype=np.int64)
        col = np.empty(nnz, dtype=np.int64)
        val = np.empty(nnz, dtype=complex)
        for i in range(nnz):
            fields = fh.readline().split()
            row[i], col[i] = int(fields[0]), int(fields[1])
            val[i] = float(fields[2]) + 1j * float(fields[3])
    return SparseMatrix.from_triplets(row, col, val, (nrows, ncols))
