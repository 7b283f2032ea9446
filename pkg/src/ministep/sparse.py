"""Small row-compressed (CSR) matrix type used for C, G and C/dt + G."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INDEX = np.int64


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square real matrix in CSR form.

    Column indices are strictly increasing inside each row.  Stored zeros
    are allowed, which lets matrices assembled on a shared pattern keep
    identical ``indptr``/``indices`` across time steps.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=INDEX)
        indices = np.ascontiguousarray(self.indices, dtype=INDEX)
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.n < 1:
            raise ValueError("matrix dimension must be at least 1")
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise ValueError("malformed row pointer array")
        if indices.shape != data.shape or indices.size != indptr[-1]:
            raise ValueError("indices/data length does not match row pointers")
        if indices.size and (indices.min() < 0 or indices.max() >= self.n):
            raise ValueError("column index out of range")
        if indices.size > 1:
            within = np.ones(indices.size - 1, dtype=bool)
            starts = indptr[1:-1]
            within[starts[(starts > 0) & (starts < indices.size)] - 1] = False
            if np.any(np.diff(indices)[within] <= 0):
                raise ValueError("column indices are not strictly increasing within a row")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix values must be finite")
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_triplets(cls, n, rows, cols, vals) -> SparseMatrix:
        """Assemble from coordinate triplets, summing duplicates."""
        rows = np.asarray(rows, dtype=INDEX)
        cols = np.asarray(cols, dtype=INDEX)
        vals = np.asarray(vals, dtype=np.float64)
        key = rows * n + cols
        uniq, inv = np.unique(key, return_inverse=True)
        data = np.zeros(uniq.size)
        np.add.at(data, inv, vals)
        indptr = np.zeros(n + 1, dtype=INDEX)
        np.add.at(indptr, uniq // n + 1, 1)
        return cls(n, np.cumsum(indptr), uniq % n, data)

    @classmethod
    def from_dense(cls, a) -> SparseMatrix:
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square 2-D array")
        rows, cols = np.nonzero(a)
        return cls.from_triplets(a.shape[0], rows, cols, a[rows, cols])

    @classmethod
    def identity(cls, n: int) -> SparseMatrix:
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=INDEX), np.diff(self.indptr))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.row_ids(), self.indices] = self.data
        return out

    def diagonal(self) -> np.ndarray:
        rows = self.row_ids()
        on = rows == self.indices
        d = np.zeros(self.n)
        d[rows[on]] = self.data[on]
        return d

    def offdiag_abs_sum(self) -> np.ndarray:
        """Per-row sum of |a_ij| over j != i."""
        rows = self.row_ids()
        w = np.where(rows == self.indices, 0.0, np.abs(self.data))
        return np.bincount(rows, weights=w, minlength=self.n)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.bincount(self.row_ids(), weights=self.data * x[self.indices], minlength=self.n)

    def same_pattern(self, other: SparseMatrix) -> bool:
        return (self.n == other.n
                and (self.indices is other.indices
                     or (np.array_equal(self.indptr, other.indptr)
                         and np.array_equal(self.indices, other.indices))))

    def with_data(self, data) -> SparseMatrix:
        return SparseMatrix(self.n, self.indptr, self.indices, data)

    def scaled_sum(self, alpha: float, other: SparseMatrix, beta: float = 1.0) -> SparseMatrix:
        """Return alpha * self + beta * other."""
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        if self.same_pattern(other):
            return self.with_data(alpha * self.data + beta * other.data)
        rows = np.concatenate([self.row_ids(), other.row_ids()])
        cols = np.concatenate([self.indices, other.indices])
        vals = np.concatenate([alpha * self.data, beta * other.data])
        return SparseMatrix.from_triplets(self.n, rows, cols, vals)

    def submatrix(self, lo: int, hi: int) -> np.ndarray:
        """Dense copy of the diagonal block rows/cols [lo, hi)."""
        out = np.zeros((hi - lo, hi - lo))
        for i in range(lo, hi):
            k0, k1 = self.indptr[i], self.indptr[i + 1]
            cols = self.indices[k0:k1]
            keep = (cols >= lo) & (cols < hi)
            out[i - lo, cols[keep] - lo] = self.data[k0:k1][keep]
        return out

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.data.size})"
