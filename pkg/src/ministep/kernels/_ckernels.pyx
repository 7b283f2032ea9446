# cython: language_level=3
"""Compiled inner loops for the CSR solvers and the dense block LU."""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

ctypedef cnp.int64_t idx_t


def residual(const idx_t[::1] indptr, const idx_t[::1] indices,
             const double[::1] data, const double[::1] x, const double[::1] b):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, k
    cdef double s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] r = out
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        r[i] = b[i] - s
    return out


def jacobi_sweep(const idx_t[::1] indptr, const idx_t[::1] indices,
                 const double[::1] data, const double[::1] diag,
                 const double[::1] b, const double[::1] x_old, double[::1] x_new):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s += data[k] * x_old[j]
        x_new[i] = (b[i] - s) / diag[i]


def gauss_seidel_sweep(const idx_t[::1] indptr, const idx_t[::1] indices,
                       const double[::1] data, const double[::1] diag,
                       const double[::1] b, double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s += data[k] * x[j]
        x[i] = (b[i] - s) / diag[i]


def offblock_rhs(const idx_t[::1] indptr, const idx_t[::1] indices,
                 const double[::1] data, const double[::1] b,
                 const double[::1] x, Py_ssize_t lo, Py_ssize_t hi,
                 double[::1] out):
    """out[i - lo] = b[i] - sum of a_ij x_j over columns j outside [lo, hi)."""
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(lo, hi):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j < lo or j >= hi:
                s += data[k] * x[j]
        out[i - lo] = b[i] - s


def lu_factor(a, double pivot_tol):
    """Partial-pivoting LU of a dense square matrix.

    Returns ``(lu, piv, bad)``; ``bad`` is the first column whose pivot
    magnitude is at or below ``pivot_tol``, or -1.
    """
    lu_arr = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] lu = lu_arr
    cdef Py_ssize_t n = lu.shape[0]
    piv_arr = np.arange(n, dtype=np.int64)
    cdef idx_t[::1] piv = piv_arr
    cdef Py_ssize_t i, j, k, p
    cdef double big, v, f
    for k in range(n):
        p = k
        big = fabs(lu[k, k])
        for i in range(k + 1, n):
            v = fabs(lu[i, k])
            if v > big:
                big = v
                p = i
        if big <= pivot_tol:
            return lu_arr, piv_arr, k
        if p != k:
            for j in range(n):
                v = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = v
            j = piv[k]
            piv[k] = piv[p]
            piv[p] = j
        for i in range(k + 1, n):
            f = lu[i, k] / lu[k, k]
            lu[i, k] = f
            if f != 0.0:
                for j in range(k + 1, n):
                    lu[i, j] -= f * lu[k, j]
    return lu_arr, piv_arr, -1


def lu_solve(const double[:, ::1] lu, const idx_t[::1] piv, const double[::1] b):
    cdef Py_ssize_t n = lu.shape[0]
    cdef Py_ssize_t i, j
    cdef double s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] x = out
    for i in range(n):
        s = b[piv[i]]
        for j in range(i):
            s -= lu[i, j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= lu[i, j] * x[j]
        x[i] = s / lu[i, i]
    return out
