"""NumPy implementations of the solver kernels.

Same signatures and semantics as the compiled module; used when the
extension is not built.
"""
import numpy as np


def _row_ids(indptr):
    return np.repeat(np.arange(indptr.size - 1), np.diff(indptr))


def residual(indptr, indices, data, x, b):
    n = indptr.size - 1
    s = np.bincount(_row_ids(indptr), weights=data * x[indices], minlength=n)
    return b - s


def _excluded_rowsum(indptr, indices, data, x, rows, lo, hi):
    # row sums skipping columns in [lo[r], hi[r]) for each listed row
    start, stop = indptr[rows[0]], indptr[rows[-1] + 1]
    cols = indices[start:stop]
    local = _row_ids(indptr[rows[0]:rows[-1] + 2] - start)
    keep = (cols < lo[local]) | (cols >= hi[local])
    prod = np.where(keep, data[start:stop] * x[cols], 0.0)
    return np.bincount(local, weights=prod, minlength=rows.size)


def jacobi_sweep(indptr, indices, data, diag, b, x_old, x_new):
    rows = np.arange(indptr.size - 1)
    s = _excluded_rowsum(indptr, indices, data, x_old, rows, rows, rows + 1)
    x_new[:] = (b - s) / diag


def gauss_seidel_sweep(indptr, indices, data, diag, b, x):
    for i in range(indptr.size - 1):
        lo, hi = indptr[i], indptr[i + 1]
        cols = indices[lo:hi]
        off = cols != i
        s = data[lo:hi][off] @ x[cols[off]]
        x[i] = (b[i] - s) / diag[i]


def offblock_rhs(indptr, indices, data, b, x, lo, hi, out):
    rows = np.arange(lo, hi)
    s = _excluded_rowsum(indptr, indices, data, x, rows,
                         np.full(rows.size, lo), np.full(rows.size, hi))
    out[:] = b[lo:hi] - s


def lu_factor(a, pivot_tol):
    lu = np.array(a, dtype=np.float64, order="C", copy=True)
    n = lu.shape[0]
    piv = np.arange(n, dtype=np.int64)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= pivot_tol:
            return lu, piv, k
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            piv[[k, p]] = piv[[p, k]]
        f = lu[k + 1:, k] / lu[k, k]
        lu[k + 1:, k] = f
        lu[k + 1:, k + 1:] -= np.outer(f, lu[k, k + 1:])
    return lu, piv, -1


def lu_solve(lu, piv, b):
    n = lu.shape[0]
    x = np.array(b, dtype=np.float64)[piv]
    for i in range(n):
        x[i] = x[i] - lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x
