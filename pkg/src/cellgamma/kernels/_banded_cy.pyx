# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched banded-Cholesky kernels (bandwidth 2).

Same band layout as the numpy fallback: ab[b, 0, j] = A[j, j],
ab[b, 1, j] = A[j+1, j], ab[b, 2, j] = A[j+2, j].
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def chol_factor_banded(ab):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] a = np.ascontiguousarray(ab, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[2]
    if a.shape[1] != 3:
        raise ValueError("band storage must have 3 rows")
    cdef cnp.ndarray[cnp.float64_t, ndim=3] c = np.zeros_like(a)
    cdef Py_ssize_t b, j
    cdef double d, t
    for b in range(m):
        for j in range(n):
            d = a[b, 0, j]
            if j >= 1:
                d -= c[b, 1, j - 1] * c[b, 1, j - 1]
            if j >= 2:
                d -= c[b, 2, j - 2] * c[b, 2, j - 2]
            if d <= 0.0:
                raise np.linalg.LinAlgError("matrix not positive definite")
            c[b, 0, j] = sqrt(d)
            if j + 1 < n:
                t = a[b, 1, j]
                if j >= 1:
                    t -= c[b, 2, j - 1] * c[b, 1, j - 1]
                c[b, 1, j] = t / c[b, 0, j]
            if j + 2 < n:
                c[b, 2, j] = a[b, 2, j] / c[b, 0, j]
    return c


def chol_solve_banded(cf, rhs):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] c = np.ascontiguousarray(cf, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] bb = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t m = c.shape[0]
    cdef Py_ssize_t n = c.shape[2]
    if bb.shape[0] != m or bb.shape[1] != n:
        raise ValueError("rhs shape does not match factor")
    cdef Py_ssize_t r = bb.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] x = np.empty_like(bb)
    cdef Py_ssize_t b, j, k
    cdef double t
    for b in range(m):
        for j in range(n):
            for k in range(r):
                t = bb[b, j, k]
                if j >= 1:
                    t -= c[b, 1, j - 1] * x[b, j - 1, k]
                if j >= 2:
                    t -= c[b, 2, j - 2] * x[b, j - 2, k]
                x[b, j, k] = t / c[b, 0, j]
        for j in range(n - 1, -1, -1):
            for k in range(r):
                t = x[b, j, k]
                if j + 1 < n:
                    t -= c[b, 1, j] * x[b, j + 1, k]
                if j + 2 < n:
                    t -= c[b, 2, j] * x[b, j + 2, k]
                x[b, j, k] = t / c[b, 0, j]
    return x
