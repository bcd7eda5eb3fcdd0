# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: AR(1) recursion and the SVM dual coordinate sweep."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def ar1_filter(innov, double rho, double x0):
    cdef const double[::1] v = np.ascontiguousarray(innov, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    if n == 0:
        return out_arr
    cdef double[::1] out = out_arr
    cdef double prev = x0
    cdef Py_ssize_t k
    out[0] = prev
    for k in range(1, n):
        prev = rho * prev + v[k]
        out[k] = prev
    return out_arr


def dcd_epoch(const double[:, ::1] X, const double[::1] y, double[::1] alpha,
              double[::1] w, const double[::1] qdiag, const cnp.int64_t[::1] order,
              double C):
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t m = order.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double dot, g, a, pg, apg, a_new, step, yi
    cdef double max_viol = 0.0
    for k in range(m):
        i = order[k]
        yi = y[i]
        dot = 0.0
        for j in range(p):
            dot += w[j] * X[i, j]
        g = yi * dot - 1.0
        a = alpha[i]
        if a == 0.0:
            pg = g if g < 0.0 else 0.0
        elif a == C:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        apg = pg if pg >= 0.0 else -pg
        if apg > max_viol:
            max_viol = apg
        if pg != 0.0:
            a_new = a - g / qdiag[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > C:
                a_new = C
            alpha[i] = a_new
            step = (a_new - a) * yi
            for j in range(p):
                w[j] += step * X[i, j]
    return max_viol
