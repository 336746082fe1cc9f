# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops over the coalition lattice.

Every function here has a twin with the same signature in ``_pykernels``.
Inputs are expected to be C-contiguous float64/int64 arrays; the Python
layer takes care of that.
"""

import numpy as np

from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


def shapley_table(const double[::1] values, const double[::1] weights):
    """Subset-form Shapley value of a full characteristic-function table."""
    cdef int n = <int>weights.shape[0]
    phi_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] phi = phi_arr
    with nogil:
        _shapley_into(&values[0], &weights[0], n, &phi[0])
    return phi_arr


def modularity_range(const double[::1] values, int n):
    """Min and max of v(J+i+j) - v(J+i) - v(J+j) + v(J) over all J, i < j."""
    cdef double lo = np.inf, hi = -np.inf, d
    cdef unsigned long long size = 1ULL << n
    cdef unsigned long long J, bi, bj
    cdef int i, j
    with nogil:
        for J in range(size):
            for i in range(n):
                bi = 1ULL << i
                if J & bi:
                    continue
                for j in range(i + 1, n):
                    bj = 1ULL << j
                    if J & bj:
                        continue
                    d = values[J | bi | bj] - values[J | bi] - values[J | bj] + values[J]
                    if d < lo:
                        lo = d
                    if d > hi:
                        hi = d
    return lo, hi


def variance_table(const double[:, ::1] cov):
    """Var of every sub-sum, filled incrementally from the coalition minus its lowest player."""
    cdef Py_ssize_t n = cov.shape[0]
    cdef unsigned long long size = 1ULL << n
    cdef unsigned long long J, rest, r
    cdef int i, j
    cdef double cross
    out_arr = np.zeros(size, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for J in range(1, size):
            i = __builtin_ctzll(J)
            rest = J & (J - 1)
            cross = 0.0
            r = rest
            while r:
                j = __builtin_ctzll(r)
                cross = cross + cov[i, j]
                r = r & (r - 1)
            out[J] = out[rest] + cov[i, i] + 2.0 * cross
    return out_arr


cdef void _shapley_into(const double* values, const double* weights, int n,
                        double* phi) noexcept nogil:
    # phi_i = sum_{J has i} w(|J|-1) v(J) - sum_{J lacks i} w(|J|) v(J)
    cdef unsigned long long size = 1ULL << n
    cdef unsigned long long J
    cdef int i, p
    cdef double v
    cdef double acc[64]
    cdef double pick[2]
    for i in range(n):
        acc[i] = 0.0
    for J in range(1, size):
        p = __builtin_popcountll(J)
        v = values[J]
        # indexed select: the membership bit is unpredictable, a branch would stall
        pick[0] = -weights[p] * v if p < n else 0.0
        pick[1] = weights[p - 1] * v
        for i in range(n):
            acc[i] += pick[(J >> i) & 1]
    for i in range(n):
        phi[i] = acc[i]


def sd_diag_shapley_batch(const double[:, ::1] variances, const double[::1] weights):
    """Shapley values of the SD game of diag(variances[k]) for each row k."""
    cdef Py_ssize_t m = variances.shape[0]
    cdef int n = <int>variances.shape[1]
    cdef unsigned long long size = 1ULL << n
    cdef unsigned long long J, rest
    cdef Py_ssize_t k
    cdef int h
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* var = <double*>malloc(size * sizeof(double))
    cdef double* sd = <double*>malloc(size * sizeof(double))
    if var == NULL or sd == NULL:
        free(var)
        free(sd)
        raise MemoryError()
    try:
        with nogil:
            var[0] = 0.0
            sd[0] = 0.0
            for k in range(m):
                for J in range(1, size):
                    h = __builtin_ctzll(J)
                    rest = J & (J - 1)
                    var[J] = var[rest] + variances[k, h]
                    sd[J] = sqrt(var[J]) if var[J] > 0.0 else 0.0
                _shapley_into(sd, &weights[0], n, &out[k, 0])
    finally:
        free(var)
        free(sd)
    return out_arr


def permutation_marginal_sums(const double[::1] values, const long long[:, ::1] perms):
    """Sum over rows of each player's marginal contribution along the row's order."""
    cdef Py_ssize_t m = perms.shape[0]
    cdef Py_ssize_t n = perms.shape[1]
    cdef Py_ssize_t k, pos
    cdef long long p
    cdef unsigned long long mask
    cdef double prev, cur
    acc_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    with nogil:
        for k in range(m):
            mask = 0
            prev = values[0]
            for pos in range(n):
                p = perms[k, pos]
                mask = mask | (1ULL << p)
                cur = values[mask]
                acc[p] += cur - prev
                prev = cur
    return acc_arr


def row_sums(const double[:, ::1] cov):
    """Sequential left-to-right row sums."""
    cdef Py_ssize_t n = cov.shape[0]
    cdef Py_ssize_t i, j
    cdef double s
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(cov.shape[1]):
                s = s + cov[i, j]
            out[i] = s
    return out_arr


def decomposed_shapley(int n, const long long[:, ::1] members, const double[:, ::1] tables):
    """Exact per-issue Shapley summed over issues of at most two players."""
    cdef Py_ssize_t T = members.shape[0]
    cdef Py_ssize_t t
    cdef long long a, b
    cdef double ta, tb, tab
    phi_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] phi = phi_arr
    with nogil:
        for t in range(T):
            a = members[t, 0]
            b = members[t, 1]
            ta = tables[t, 1]
            if b < 0:
                phi[a] += ta
            else:
                tb = tables[t, 2]
                tab = tables[t, 3]
                phi[a] += 0.5 * (ta + tab - tb)
                phi[b] += 0.5 * (tb + tab - ta)
    return phi_arr
