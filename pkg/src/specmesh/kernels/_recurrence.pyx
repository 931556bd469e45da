# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled three-term recurrence over a CSR matrix and a dense signal block."""

import numpy as np
cimport numpy as cnp


def recurrence_basis(
    double[::1] data,
    int[::1] indices,
    int[::1] indptr,
    double[:, ::1] X,
    double[::1] ak,
    double[::1] bk,
    double[::1] ck,
    double[:, :, ::1] out,
):
    cdef Py_ssize_t K = out.shape[0]
    cdef Py_ssize_t n = out.shape[1]
    cdef Py_ssize_t m = out.shape[2]
    cdef Py_ssize_t k, i, c, p
    cdef int j
    cdef double v, a, b, cc

    cdef double[::1] acc = np.empty(m, dtype=np.float64)

    for k in range(K - 1):
        a = ak[k]
        b = bk[k]
        cc = ck[k]
        for i in range(n):
            for c in range(m):
                acc[c] = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                v = data[p]
                for c in range(m):
                    acc[c] += v * out[k, j, c]
            if k >= 1:
                for c in range(m):
                    out[k + 1, i, c] = a * acc[c] + b * out[k, i, c] + cc * out[k - 1, i, c]
            else:
                for c in range(m):
                    out[k + 1, i, c] = a * acc[c] + b * out[k, i, c]
