# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the two hot quadrature-assembly primitives.

Semantics match ``_corenp`` exactly; this version replaces the vectorized
scatter/broadcast with tight loops.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double PI = 3.14159265358979323846


def scatter_lagrange4(Py_ssize_t ny, double[::1] y, cnp.intp_t[::1] rows,
                      double[::1] pts, double[::1] coeffs):
    """Accumulate S[rows, stencil(pts)] += coeffs * (4-point Lagrange weights)."""
    S_arr = np.zeros((ny, ny))
    cdef double[:, ::1] S = S_arr
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t q, lo, hi, mid, i0, j, r, row
    cdef double p, c, num, den
    for q in range(n):
        p = pts[q]
        c = coeffs[q]
        row = rows[q]
        lo = 0
        hi = ny
        while lo < hi:
            mid = (lo + hi) >> 1
            if y[mid] < p:
                lo = mid + 1
            else:
                hi = mid
        i0 = lo - 2
        if i0 < 0:
            i0 = 0
        elif i0 > ny - 4:
            i0 = ny - 4
        for j in range(4):
            num = c
            den = 1.0
            for r in range(4):
                if r != j:
                    num *= p - y[i0 + r]
                    den *= y[i0 + j] - y[i0 + r]
            S[row, i0 + j] += num / den
    return S_arr


def lag_kernel_mats(double[::1] y, double[::1] w_y, double[::1] nodes,
                    double[::1] wts, int kind):
    """Time-integrated reflected heat kernels as dense (Q0, Q1) matrices."""
    cdef Py_ssize_t ny = y.shape[0], nq = nodes.shape[0]
    Q0_arr = np.zeros((ny, ny))
    Q1_arr = np.zeros((ny, ny))
    cdef double[:, ::1] Q0 = Q0_arr
    cdef double[:, ::1] Q1 = Q1_arr
    cdef Py_ssize_t m, n, q
    cdef double ell, w, pref, dif, ssum, ed, es, ker, inv4
    for q in range(nq):
        ell = nodes[q]
        w = wts[q]
        pref = 1.0 / sqrt(4.0 * PI * ell)
        inv4 = 1.0 / (4.0 * ell)
        for m in range(ny):
            for n in range(ny):
                dif = y[m] - y[n]
                ssum = y[m] + y[n]
                ed = pref * exp(-dif * dif * inv4)
                es = pref * exp(-ssum * ssum * inv4)
                if kind == 0:
                    ker = ed + es
                else:
                    ker = 0.5 * (ssum * es - dif * ed) / ell
                Q0[m, n] += w * ker
                Q1[m, n] += w * ell * ker
    for m in range(ny):
        for n in range(ny):
            Q0[m, n] *= w_y[n]
            Q1[m, n] *= w_y[n]
    return Q0_arr, Q1_arr
