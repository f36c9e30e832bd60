"""Pure-NumPy backend for the two hot quadrature-assembly primitives.

The compiled backend (``_corecy``) implements the same two functions with
identical semantics; :mod:`mildprandtl.kernels` picks whichever imports.
"""

from __future__ import annotations

import numpy as np


def scatter_lagrange4(ny, y, rows, pts, coeffs):
    """Accumulate S[rows, stencil(pts)] += coeffs * (4-point Lagrange weights).

    ``pts`` are interpolation abscissae inside [y[0], y[-1]]; each one is
    interpolated through the four nearest nodes, so the scatter represents
    "evaluate a grid function at pts, weight by coeffs, and sum per row" as a
    dense (ny, ny) matrix acting on nodal values.
    """
    idx = np.searchsorted(y, pts)
    i0 = np.clip(idx - 2, 0, ny - 4)
    J = i0[:, None] + np.arange(4)[None, :]
    yn = y[J]
    d = pts[:, None] - yn
    w = np.empty_like(yn)
    for j in range(4):
        num = np.ones_like(pts)
        den = 1.0
        for r in range(4):
            if r != j:
                num = num * d[:, r]
                den = den * (yn[:, j] - yn[:, r])
        w[:, j] = num / den
    flat = (rows[:, None] * ny + J).ravel()
    vals = (coeffs[:, None] * w).ravel()
    return np.bincount(flat, weights=vals, minlength=ny * ny).reshape(ny, ny)


def lag_kernel_mats(y, w_y, nodes, wts, kind):
    """Time-integrated reflected heat kernels as dense matrices.

    Returns (Q0, Q1) with
      Q0[m, n] = sum_q wts[q] * ker(Y_m, Y_n, nodes[q]) * w_y[n]
      Q1[m, n] = sum_q wts[q] * nodes[q] * ker(...) * w_y[n]
    where ker is the Neumann (even-reflection) kernel for kind=0 and its
    negated Y'-derivative for kind=1.
    """
    dif = y[:, None] - y[None, :]
    ssum = y[:, None] + y[None, :]
    ny = len(y)
    Q0 = np.zeros((ny, ny))
    Q1 = np.zeros((ny, ny))
    for ell, w in zip(nodes, wts):
        pref = 1.0 / np.sqrt(4.0 * np.pi * ell)
        Ed = pref * np.exp(-(dif * dif) / (4.0 * ell))
        Es = pref * np.exp(-(ssum * ssum) / (4.0 * ell))
        if kind == 0:
            ker = Ed + Es
        else:
            ker = 0.5 * (ssum * Es - dif * Ed) / ell
        Q0 += w * ker
        Q1 += (w * ell) * ker
    Q0 *= w_y[None, :]
    Q1 *= w_y[None, :]
    return Q0, Q1
