"""Quadrature panel construction shared by both backend implementations.

Everything here is geometry: Gauss-Legendre reference rules, per-row panel
decompositions of the similarity variable (split at the reflection fold), and
the geometric sigma-cascade that resolves exp(-Y^2/(4 sigma^2)) boundary
layers down to sigma -> 0.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

#: exp(-ETA_MAX^2) ~ 1.2e-33: truncation of the similarity variable
ETA_MAX = 8.7

#: width of one Gauss-Legendre panel in the similarity variable
ETA_PANEL_W = 1.0

#: Gauss-Legendre points per similarity panel
N_GL_ETA = 12

#: Gauss-Legendre points per lag-interval (smooth time quadrature)
N_GL_LAG = 10

#: sigma-cascade shape: subpanels per octave and points per subpanel
SIGMA_PER_OCTAVE = 2
N_GL_SIGMA = 10


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(a: float, b: float, n: int):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = gauss_legendre(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _split_panels(a: float, b: float, crit: float, width: float):
    """Panel edges covering [a, b] with ~``width`` spacing, with ``crit``
    forced onto an edge when it falls inside (integrand kinks there)."""
    if b <= a:
        return []
    edges = [a]
    if a < crit < b:
        for lo, hi in ((a, crit), (crit, b)):
            n = max(1, int(np.ceil((hi - lo) / width)))
            edges.extend(np.linspace(lo, hi, n + 1)[1:].tolist())
    else:
        n = max(1, int(np.ceil((b - a) / width)))
        edges.extend(np.linspace(a, b, n + 1)[1:].tolist())
    return list(zip(edges[:-1], edges[1:]))


def similarity_rows(y_nodes: np.ndarray, L: float, s: float,
                    row_idx: np.ndarray | None = None):
    """Flat quadrature tables for the reflected-kernel similarity integral.

    For each output row Y_m the integral runs over eta in
    [-(Y_m + L)/s, (L - Y_m)/s] (zero extension beyond the truncation height),
    clipped to |eta| <= ETA_MAX, with panels split at the reflection fold
    eta* = -Y_m/s where |Y_m + s*eta| has a kink.

    Returns (rows, eta, w): 1-D arrays of equal length -- row indices, eta
    nodes, and Gauss-Legendre weights.  Rows whose window is the full
    [-ETA_MAX, ETA_MAX] with the fold outside share one panel set (the common
    case for small s), built vectorized.  ``row_idx`` restricts the tables to
    a subset of output rows (indices into ``y_nodes``).
    """
    gx, gw = gauss_legendre(N_GL_ETA)
    parts_r, parts_e, parts_w = [], [], []
    generic = (y_nodes >= s * ETA_MAX) & (y_nodes <= L - s * ETA_MAX)
    active = np.zeros(len(y_nodes), dtype=bool)
    active[np.arange(len(y_nodes)) if row_idx is None else row_idx] = True
    if np.any(generic & active):
        panels = _split_panels(-ETA_MAX, ETA_MAX, np.nan, ETA_PANEL_W)
        eta_g = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * gx for a, b in panels])
        w_g = np.concatenate([0.5 * (b - a) * gw for a, b in panels])
        rg = np.nonzero(generic & active)[0].astype(np.intp)
        parts_r.append(np.repeat(rg, len(eta_g)))
        parts_e.append(np.tile(eta_g, len(rg)))
        parts_w.append(np.tile(w_g, len(rg)))
    for m in np.nonzero(~generic & active)[0]:
        Y = y_nodes[m]
        lo = max(-ETA_MAX, -(Y + L) / s)
        hi = min(ETA_MAX, (L - Y) / s)
        fold = -Y / s
        for a, b in _split_panels(lo, hi, fold, ETA_PANEL_W):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            parts_e.append(mid + half * gx)
            parts_w.append(half * gw)
            parts_r.append(np.full(N_GL_ETA, m, dtype=np.intp))
    if not parts_r:
        z = np.zeros(0)
        return z.astype(np.intp), z, z
    return (np.concatenate(parts_r), np.concatenate(parts_e),
            np.concatenate(parts_w))


def lag_panels(lo: float, hi: float):
    """Gauss-Legendre nodes/weights on [lo, hi] (0 < lo < hi), split
    geometrically so the e^{-z^2/(4 l)} lag dependence is resolved.

    The exponent swing across [lo, hi] at the largest relevant offset z is
    ~ 60 (hi - lo)/lo e-folds; panels with ratio <= 1.13 keep the per-panel
    swing small enough for N_GL_LAG points."""
    npan = max(1, int(np.ceil(np.log(hi / lo) / np.log(1.13))))
    edges = lo * (hi / lo) ** np.linspace(0.0, 1.0, npan + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = panel_nodes(a, b, N_GL_LAG)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def sigma_cascade(smax: float, sigma_min: float | None = None):
    """Geometric Gauss-Legendre cascade on [0, smax] resolving scales down to
    ``sigma_min`` (octave subdivision), plus a closing panel at 0.

    Integrates smooth-in-sigma^2 integrands exactly near 0 and
    exp(-c/sigma^2) layers at every represented scale.
    """
    if sigma_min is None or sigma_min <= 0:
        octaves = 10
    else:
        octaves = int(np.clip(np.ceil(np.log2(smax / sigma_min)) + 1, 3, 16))
    sig, wts = [], []
    hi = smax
    for _ in range(octaves):
        lo = 0.5 * hi
        for a, b in _split_panels(lo, hi, np.nan, (hi - lo) / SIGMA_PER_OCTAVE):
            x, w = panel_nodes(a, b, N_GL_SIGMA)
            sig.append(x)
            wts.append(w)
        hi = lo
    x, w = panel_nodes(0.0, hi, N_GL_SIGMA)
    sig.append(x)
    wts.append(w)
    return np.concatenate(sig[::-1]), np.concatenate(wts[::-1])
